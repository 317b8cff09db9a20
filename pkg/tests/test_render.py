import xml.etree.ElementTree as ET

from visroute.render import PHASE_COLORS, render_svg, write_svg
from visroute.router import route

from conftest import make, random_case

NS = "{http://www.w3.org/2000/svg}"


class TestRender:
    def test_valid_svg(self):
        inst, vis, _ = random_case(20, 1)
        text = render_svg(inst, [(u, v) for u, v, _ in vis.edges()], title="a < b")
        assert '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN"' in text
        root = ET.fromstring(text.split("\n", 2)[2])
        assert root.tag == NS + "svg" and root.get("version") == "1.1"
        assert root.find(NS + "title").text == "a < b"

    def test_layers(self):
        inst, vis, _ = random_case(20, 1)
        root = ET.fromstring(render_svg(inst, [(u, v) for u, v, _ in vis.edges()]).split("\n", 2)[2])
        groups = {g.get("id"): g for g in root.iter(NS + "g")}
        constraints = groups["constraints"].findall(NS + "line")
        assert len(constraints) == inst.m
        assert all(line.get("stroke-width") == "2.5" for line in constraints)
        assert len(groups["edges"].findall(NS + "line")) == vis.edge_count() - inst.m
        assert len(groups["points"].findall(NS + "circle")) == inst.n

    def test_trace_colours(self):
        inst = make([(0, 0), (1, 10), (-4, 5), (12, 8)], [(2, 3)])
        from visroute.visibility import build_visibility_graph
        g = build_visibility_graph(inst)
        tr = route(inst, g, 0, 1).to_json()
        root = ET.fromstring(render_svg(inst, [], tr).split("\n", 2)[2])
        trace = next(g for g in root.iter(NS + "g") if g.get("id") == "trace")
        colours = [line.get("stroke") for line in trace.findall(NS + "line")]
        assert colours == [PHASE_COLORS["AVOID"], PHASE_COLORS["OPPOSITE"], PHASE_COLORS["THETA"]]

    def test_labels_off_for_large(self):
        inst, _, _ = random_case(80, 2)
        assert "<text" not in render_svg(inst)

    def test_deterministic(self, tmp_path):
        inst, vis, _ = random_case(20, 1)
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        write_svg(str(a), inst, list(vis.edge_set()))
        write_svg(str(b), inst, list(vis.edge_set()))
        assert a.read_bytes() == b.read_bytes()
