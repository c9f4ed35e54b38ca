"""Unit tests for the dataflow <-> Gamma conversions, instantiation and fusion."""

import pytest


def _graph(name: str):
    from gammaflow.fixtures import read_fixture
    from gammaflow.graph_text import parse_graph_text

    return parse_graph_text(read_fixture(name))


def _program(name_or_text: str):
    from gammaflow.fixtures import read_fixture
    from gammaflow.gamma_text import parse_program

    text = read_fixture(name_or_text) if name_or_text.endswith(".gamma") else name_or_text
    return parse_program(text)


# --- dataflow_to_gamma ---


def test_example1_converts_to_the_three_reaction_listing():
    """Each operator node becomes the reaction of the same name in the listing."""
    from gammaflow.convert import dataflow_to_gamma
    from gammaflow.gamma import same_shape

    program, report = dataflow_to_gamma(_graph("example1.df"))
    listing = _program("example1.gamma")
    assert [r.name for r in program.reactions] == ["R1", "R2", "R3"]
    for reaction in program.reactions:
        assert same_shape(reaction, listing.reaction(reaction.name))
    assert sorted(program.initial) == sorted(listing.initial)
    assert report.sink_labels == ["m"]
    assert report.direction == "df2gamma"


def test_example2_converts_to_nine_reactions():
    """The loop matches the R11-R19 listing except for R17's exit output."""
    from gammaflow.convert import dataflow_to_gamma
    from gammaflow.gamma import same_shape

    program, report = dataflow_to_gamma(_graph("example2.df"))
    listing = _program("example2.gamma")
    assert len(program.reactions) == 9
    differing = [r.name for r in program.reactions if not same_shape(r, listing.reaction(r.name))]
    assert differing == ["R17"]
    assert report.sink_labels == ["C14"]


def test_example2_reaction_kinds():
    """Three tag increments, one compare with three outputs, three steers, two arith."""
    from gammaflow.convert import dataflow_to_gamma
    from gammaflow.gamma import BinOp, Num, Var

    program, _ = dataflow_to_gamma(_graph("example2.df"))
    bumps = [
        r.name
        for r in program.reactions
        if r.by[0].outputs and r.by[0].outputs[0].tag == BinOp("+", Var("v"), Num(1))
    ]
    assert bumps == ["R11", "R12", "R13"]
    r14 = program.reaction("R14")
    assert [len(c.outputs) for c in r14.by] == [3, 3]
    steers = [r.name for r in program.reactions if r.by[0].guard == BinOp("==", Var("id2"), Num(1))]
    assert steers == ["R15", "R16", "R17"]
    assert program.reaction("R15").by[1].is_null


def test_relabel_generates_node_based_labels():
    """relabel=True names each edge after its producer and output index."""
    from gammaflow.convert import dataflow_to_gamma

    program, report = dataflow_to_gamma(_graph("example1.df"), relabel=True)
    assert report.label_map["A1"] == "nS_A_o1"
    assert report.label_map["m"] == "nR3_o1"
    assert report.sink_labels == ["nR3_o1"]
    assert {e.label for e in program.initial} == {"nS_A_o1", "nS_B_o1", "nS_C_o1", "nS_D_o1"}


def test_inputs_become_the_initial_multiset():
    """Explicit tokens override Source defaults."""
    from gammaflow.convert import dataflow_to_gamma
    from gammaflow.models import Element

    program, _ = dataflow_to_gamma(
        _graph("example2.df"), [Element(value=0, label="B1")], overrides={"S_X": 9}
    )
    assert sorted(program.initial) == [
        Element(value=0, label="B1"),
        Element(value=4, label="A1"),
        Element(value=9, label="C1"),
    ]


def test_source_straight_to_sink_has_no_reactions():
    """A graph without operators converts to an empty reaction list over its initial tokens."""
    from gammaflow.convert import dataflow_to_gamma
    from gammaflow.graph_text import parse_graph_text
    from gammaflow.models import Element

    graph = parse_graph_text("node s source 5\nnode o sink\nedge z s o\n")
    program, report = dataflow_to_gamma(graph)
    assert program.reactions == ()
    assert program.initial == (Element(value=5, label="z"),)
    assert report.sink_labels == ["z"]


# --- gamma_reaction_to_dataflow ---


def test_arith_reaction_rebuilds_a_binary_node():
    """R1 becomes two sources feeding an adder feeding a sink."""
    from gammaflow.convert import gamma_reaction_to_dataflow

    graph, report = gamma_reaction_to_dataflow(_program("example1.gamma").reaction("R1"))
    assert graph.kind_counts() == {"source": 2, "arith": 1, "sink": 1}
    adder = next(n for n in graph.nodes if n.kind == "arith")
    assert adder.op == "+"
    assert {e.label for e in graph.inputs(adder.id)} == {"A1", "B1"}
    assert report.terminal_map == {"B2": "B2"}
    assert report.non_round_trippable == []


def test_guarded_reaction_rebuilds_a_steer_under_a_compare():
    """R16's guard id2 == 1 becomes a compare node controlling one steer."""
    from gammaflow.convert import gamma_reaction_to_dataflow
    from gammaflow.dataflow import NodeKind

    graph, _ = gamma_reaction_to_dataflow(_program("example2.gamma").reaction("R16"))
    nodes = graph.node_map()
    steers = [n for n in graph.nodes if n.kind is NodeKind.STEER]
    compares = [n for n in graph.nodes if n.kind is NodeKind.COMPARE]
    assert len(steers) == 1 and len(compares) == 1
    assert (compares[0].op, compares[0].literal) == ("==", 1)
    control = next(e for e in graph.inputs(steers[0].id) if e.slot == 1)
    assert nodes[control.producer] == compares[0]
    assert graph.sink_labels() == ["B17"]


def test_tag_increment_reaction_becomes_an_inctag_with_a_warning():
    """R11's v+1 output is rebuilt as one inctag with both alternatives."""
    from gammaflow.convert import gamma_reaction_to_dataflow
    from gammaflow.dataflow import NodeKind

    graph, report = gamma_reaction_to_dataflow(_program("example2.gamma").reaction("R11"))
    inctag = next(n for n in graph.nodes if n.kind is NodeKind.INCTAG)
    assert {e.label for e in graph.inputs(inctag.id)} == {"A1", "A11"}
    assert report.non_round_trippable == ["R11"]
    assert any("inctag" in w for w in report.warnings)


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("B = replace [a,'p'], [b,'q'] by [a and b, 'r']", "no dataflow node"),
        ("T = replace [a,'p',v] by [a, 'r', v + 2]", "tag expression"),
        ("L = replace [a,x] by [a, x]", "literals"),
        ("K = replace [a,'p'] by [a, 'q'] if a > 1 by [a, 'r'] if a < 0", "negation"),
    ],
)
def test_unsupported_reactions_raise(text, message):
    """Shapes with no dataflow counterpart are conversion errors."""
    from gammaflow.convert import gamma_reaction_to_dataflow
    from gammaflow.errors import ConversionError
    from gammaflow.gamma_text import parse_reaction

    with pytest.raises(ConversionError, match=message):
        gamma_reaction_to_dataflow(parse_reaction(text))


# --- gamma_to_dataflow ---


def test_whole_listing_reproduces_the_example1_graph():
    """Stitching R1-R3 along B2 and C2 gives the fixture graph up to node ids."""
    from gammaflow.convert import gamma_to_dataflow

    graph, report = gamma_to_dataflow(_program("example1.gamma"))
    assert graph.edge_signature() == _graph("example1.df").edge_signature()
    assert report.terminal_map == {"m": "m"}


def test_loop_free_round_trip():
    """Graph -> Gamma -> graph preserves the wiring of a loop-free graph."""
    from gammaflow.convert import dataflow_to_gamma, gamma_to_dataflow

    original = _graph("example1.df")
    program, _ = dataflow_to_gamma(original)
    graph, _ = gamma_to_dataflow(program)
    assert graph.edge_signature() == original.edge_signature()


def test_unconsumed_initial_elements_become_source_sink_pairs():
    """An element nothing reads still shows up in the rebuilt graph."""
    from gammaflow.convert import gamma_to_dataflow

    program = _program("R = replace [a,'p'] by [a + 1, 'q']\nmultiset { [1,'p'], [7,'z'] }")
    graph, report = gamma_to_dataflow(program)
    assert report.terminal_map["z"] == "z"
    assert "q" in graph.sink_labels()


# --- instantiate_for_multiset ---


def test_binary_reaction_over_six_elements_makes_three_copies():
    """Six elements fill three copies of a two-source graph."""
    from gammaflow.convert import gamma_reaction_to_dataflow, instantiate_for_multiset
    from gammaflow.models import Element

    graph, conversion = gamma_reaction_to_dataflow(_program("example1.gamma").reaction("R1"))
    elements = [Element(value=v, label="A1" if v % 2 else "B1") for v in range(1, 7)]
    copies, report = instantiate_for_multiset(graph, elements, conversion.terminal_map)
    assert report.instances == 3
    assert report.leftovers == []
    assert len(copies.sources()) == 6
    assert set(report.terminal_map.values()) == {"B2"}
    assert sorted(n.value for n in copies.sources()) == [1, 2, 3, 4, 5, 6]


def test_instantiation_reports_leftovers():
    """An element with no partner of the other label is left over and warned about."""
    from gammaflow.convert import gamma_reaction_to_dataflow, instantiate_for_multiset
    from gammaflow.models import Element

    graph, conversion = gamma_reaction_to_dataflow(_program("example1.gamma").reaction("R1"))
    elements = [Element(value=v, label="A1") for v in (1, 2, 3, 4)]
    elements += [Element(value=v, label="B1") for v in (5, 6, 7)]
    copies, report = instantiate_for_multiset(
        graph, elements, source_labels=conversion.source_labels
    )
    assert report.instances == 3
    assert report.leftovers == [Element(value=4, label="A1")]
    assert report.warnings
    assert sorted(n.value for n in copies.sources()) == [1, 2, 3, 5, 6, 7]


def test_elements_of_one_label_make_no_copy():
    """Two ``A1`` elements cannot fill a Source that only accepts ``B1``."""
    from gammaflow.convert import gamma_reaction_to_dataflow, instantiate_for_multiset
    from gammaflow.models import Element

    graph, conversion = gamma_reaction_to_dataflow(_program("example1.gamma").reaction("R1"))
    elements = [Element(value=1, label="A1"), Element(value=2, label="A1")]
    copies, report = instantiate_for_multiset(
        graph, elements, conversion.terminal_map, source_labels=conversion.source_labels
    )
    assert report.instances == 0
    assert report.leftovers == elements
    assert copies.nodes == ()
    assert report.warnings


def test_one_full_copy_leaves_the_unmatched_element():
    """A matching pair makes one copy; a third element of a taken label is left."""
    from gammaflow.convert import gamma_reaction_to_dataflow, instantiate_for_multiset
    from gammaflow.models import Element

    graph, conversion = gamma_reaction_to_dataflow(_program("example1.gamma").reaction("R1"))
    elements = [Element(value=1, label="A1"), Element(value=2, label="A1")]
    elements.append(Element(value=9, label="B1"))
    _, report = instantiate_for_multiset(
        graph, elements, conversion.terminal_map, source_labels=conversion.source_labels
    )
    assert report.instances == 1
    assert report.leftovers == [Element(value=2, label="A1")]


@pytest.mark.parametrize("from_report", [True, False])
def test_sources_get_the_element_their_pattern_matches(from_report):
    """Elements follow their labels, not the multiset order, so ``10 - 3`` stays 7."""
    from gammaflow.convert import gamma_reaction_to_dataflow, instantiate_for_multiset
    from gammaflow.dataflow_exec import run
    from gammaflow.models import Element

    graph, conversion = gamma_reaction_to_dataflow(_program("example1.gamma").reaction("R3"))
    elements = [Element(value=3, label="C2"), Element(value=10, label="B2")]
    labels = conversion.source_labels if from_report else None
    copies, report = instantiate_for_multiset(
        graph, elements, conversion.terminal_map, source_labels=labels
    )
    assert report.instances == 1
    nodes = copies.node_map()
    dealt = {label: nodes[f"{sid}_i1"].value for sid, label in conversion.source_labels}
    assert dealt == {"B2": 10, "C2": 3}
    assert [e.value for e in run(copies).state.sink_elements()] == [7]


def test_conversion_report_lists_sources_in_pattern_order():
    """``source_labels`` pairs each Source with its pattern's label, first pattern first."""
    from gammaflow.convert import gamma_reaction_to_dataflow

    _, conversion = gamma_reaction_to_dataflow(_program("example1.gamma").reaction("R3"))
    assert [label for _, label in conversion.source_labels] == ["B2", "C2"]


def test_label_variable_source_takes_what_fixed_sources_leave():
    """A Source with a label variable is served after the fixed-label ones."""
    from gammaflow.convert import instantiate_for_multiset
    from gammaflow.graph_text import parse_graph_text
    from gammaflow.models import Element

    graph = parse_graph_text(
        "node a source 0\nnode b source 0\nnode R arith +\nnode OUT sink\n"
        "edge p a R.0\nedge q b R.1\nedge r R OUT\n"
    )
    elements = [Element(value=1, label="p"), Element(value=2, label="z")]
    copies, report = instantiate_for_multiset(
        graph, elements, source_labels=[("a", None), ("b", "p")]
    )
    assert report.instances == 1
    nodes = copies.node_map()
    assert (nodes["a_i1"].value, nodes["b_i1"].value) == (2, 1)


@pytest.mark.parametrize("name", ["R1", "R2", "R3"])
def test_instantiated_reaction_computes_what_the_reaction_does(name):
    """Running the copies gives the terminal elements the reaction itself produces."""
    from gammaflow.convert import gamma_reaction_to_dataflow, instantiate_for_multiset
    from gammaflow.dataflow_exec import run
    from gammaflow.equiv import observe_dataflow, observe_gamma
    from gammaflow.gamma import Program
    from gammaflow.gamma_exec import run_to_fixpoint
    from gammaflow.models import Element

    program = _program("example1.gamma")
    reaction = program.reaction(name)
    multiset = [*program.initial, Element(value=6, label="B2"), Element(value=4, label="C2")]
    graph, conversion = gamma_reaction_to_dataflow(reaction)
    copies, report = instantiate_for_multiset(
        graph, multiset, conversion.terminal_map, source_labels=conversion.source_labels
    )
    assert report.instances == 1
    consumed = [e for e in multiset if e not in report.leftovers]
    gamma = run_to_fixpoint(Program(reactions=(reaction,)), consumed)
    expected, _ = observe_gamma(gamma.multiset, set(report.terminal_map.values()))
    assert observe_dataflow(run(copies).state, report.terminal_map) == expected


# --- fuse_chain ---


def test_fusing_example1_gives_the_one_reaction_reduction():
    """R1 and R2 fold into R3, which then has the shape of Rd1."""
    from gammaflow.convert import dataflow_to_gamma, fuse_chain
    from gammaflow.gamma import same_shape

    program, _ = dataflow_to_gamma(_graph("example1.df"))
    fused = fuse_chain(program)
    assert [r.name for r in fused.reactions] == ["R3"]
    assert same_shape(fused.reactions[0], _program("rd1.gamma").reaction("Rd1"))
    assert fused.initial == program.initial


def test_fused_program_has_the_same_result():
    """Fusion does not change the steady state."""
    from gammaflow.convert import dataflow_to_gamma, fuse_chain
    from gammaflow.gamma_exec import run_to_fixpoint

    program, _ = dataflow_to_gamma(_graph("example1.df"))
    assert run_to_fixpoint(fuse_chain(program)).multiset == run_to_fixpoint(program).multiset


def test_guarded_programs_are_left_alone():
    """The min program has nothing to fuse."""
    from gammaflow.convert import fuse_chain

    program = _program("min.gamma")
    assert fuse_chain(program) == program


def test_accepts_label_follows_guards():
    """A label variable accepts only the labels its guard names."""
    from gammaflow.convert import accepts_label

    reaction = _program("example2.gamma").reaction("R13")
    pattern = reaction.replace[0]
    assert accepts_label(reaction, pattern, "C11")
    assert not accepts_label(reaction, pattern, "B11")
