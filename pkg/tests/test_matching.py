import pytest

from logbench.errors import IntegrityError
from logbench.matching import (
    TemplateIndex,
    extract_parameters,
    match_all,
    priority_order,
    splice,
    template_to_regex,
    write_unmatched_report,
)
from logbench.model import LogRecord, Template, make_template
from logbench.synth import generate_dataset

from .fixtures import tie_break_messages, tie_break_templates


class TestTemplateToRegex:
    def test_single_placeholder(self):
        ct = template_to_regex(make_template("connected to host: <*>"))
        m = ct.pattern.fullmatch("connected to host: 172.16.254.1")
        assert m and m.groups() == ("172.16.254.1",)

    def test_metacharacters_escaped(self):
        ct = template_to_regex(make_template("<*> bytes (<*> KB) sent"))
        m = ct.pattern.fullmatch("1165 bytes (1.13 KB) sent")
        assert m and m.groups() == ("1165", "1.13")
        assert ct.pattern.fullmatch("1165 bytes x1.13 KBx sent") is None

    def test_zero_placeholders_match_exactly(self):
        ct = template_to_regex(make_template("reboot"))
        assert ct.pattern.fullmatch("reboot")
        assert ct.pattern.fullmatch("reboot now") is None

    def test_wildcard_matches_empty_string(self):
        ct = template_to_regex(make_template("a <*> b"))
        assert ct.pattern.fullmatch("a  b")

    def test_static_length_accounting(self):
        t = make_template("ab <*> cd <*>")
        ct = template_to_regex(t)
        assert ct.wildcard_count == 2
        assert ct.static_length == len("ab <*> cd <*>") - 2 * 3
        assert ct.static_length + 3 * ct.wildcard_count == len(t.text)


class TestPriorityOrder:
    def test_longer_static_part_first(self):
        t1, t2 = tie_break_templates()
        ordered = priority_order([template_to_regex(t2), template_to_regex(t1)])
        assert [ct.template_id for ct in ordered] == ["T1", "T2"]

    def test_tie_prefers_fewer_wildcards(self):
        t_many = Template("many", "abcd <*> <*>")
        t_few = Template("few", "ab cd <*>")
        assert (
            template_to_regex(t_many).static_length
            == template_to_regex(t_few).static_length
        )
        ordered = priority_order(
            [template_to_regex(t_many), template_to_regex(t_few)]
        )
        assert [ct.template_id for ct in ordered] == ["few", "many"]

    def test_final_tie_breaks_on_text(self):
        a = Template("a", "xx <*>")
        b = Template("b", "yy <*>")
        ordered = priority_order([template_to_regex(b), template_to_regex(a)])
        assert [ct.text for ct in ordered] == ["xx <*>", "yy <*>"]


class TestMatchAll:
    def test_tie_break_fixture_assigns_t1(self):
        t1, t2 = tie_break_templates()
        records = tie_break_messages(20)
        outcome = match_all(records, [t2, t1])
        assert outcome.unmatched == ()
        assert all(tid == "T1" for tid in outcome.assignment.values())

    def test_unmatched_is_a_result(self):
        outcome = match_all(
            [LogRecord(line_id=1, content="unseen message")],
            [make_template("known thing")],
        )
        assert outcome.assignment == {}
        assert outcome.unmatched == (1,)

    def test_empty_catalog(self):
        records = [LogRecord(line_id=i, content=f"m {i}") for i in (1, 2)]
        outcome = match_all(records, [])
        assert outcome.unmatched == (1, 2)

    def test_totality(self):
        ds = generate_dataset(n_templates=10, n_lines=300, seed=2)
        templates = list(ds.ground_truth.templates.values())
        outcome = match_all(ds.records, templates)
        assert len(outcome.assignment) + len(outcome.unmatched) == len(ds.records)
        assert not outcome.unmatched

    def test_bucketing_equivalent_to_linear_scan(self):
        ds = generate_dataset(n_templates=15, n_lines=400, seed=9)
        templates = list(ds.ground_truth.templates.values())
        index = TemplateIndex(templates)
        for record in ds.records[:200]:
            linear = next(
                (
                    ct for ct in index.ordered
                    if ct.pattern.fullmatch(record.content)
                ),
                None,
            )
            fast = index.match(record.content)
            assert (fast and fast.template_id) == (linear and linear.template_id)

    def test_parallel_matches_serial(self):
        ds = generate_dataset(n_templates=8, n_lines=200, seed=4)
        templates = list(ds.ground_truth.templates.values())
        serial = match_all(ds.records, templates)
        parallel = match_all(ds.records, templates, workers=2)
        assert serial == parallel


class TestExtractParameters:
    def test_single_parameter(self):
        ct = template_to_regex(make_template("connected to host: <*>"))
        record = LogRecord(line_id=1, content="connected to host: 172.16.254.1")
        assert extract_parameters(record, ct) == ("172.16.254.1",)

    def test_zero_placeholders(self):
        ct = template_to_regex(make_template("reboot"))
        assert extract_parameters(LogRecord(line_id=1, content="reboot"), ct) == ()

    def test_substitution_reproduces_content(self):
        ct = template_to_regex(make_template("a=<*> b=<*>"))
        record = LogRecord(line_id=1, content="a=1 b=2")
        params = extract_parameters(record, ct)
        assert params == ("1", "2")
        assert splice(ct.text, params) == record.content

    def test_mismatch_is_integrity_fault(self):
        ct = template_to_regex(make_template("nothing like it"))
        with pytest.raises(IntegrityError):
            extract_parameters(LogRecord(line_id=1, content="other text"), ct)

    def test_reconstruction_over_synthetic_corpus(self):
        ds = generate_dataset(n_templates=10, n_lines=200, seed=6)
        index = TemplateIndex(ds.ground_truth.templates.values())
        for record in ds.records:
            ct = index.match(record.content)
            assert ct is not None
            params = extract_parameters(record, ct)
            assert splice(ct.text, params) == record.content


class TestAnnotationLoopConvergence:
    def test_adding_covering_templates_empties_unmatched(self):
        ds = generate_dataset(n_templates=10, n_lines=150, seed=8)
        templates = list(ds.ground_truth.templates.values())
        half = templates[:5]
        first = match_all(ds.records, half)
        assert first.unmatched
        second = match_all(ds.records, templates)
        assert second.unmatched == ()
        # Previously matched records stay matched.
        assert set(first.assignment) <= set(second.assignment)


class TestUnmatchedReport:
    def test_one_content_per_line(self, tmp_path):
        records = [
            LogRecord(line_id=1, content="known thing"),
            LogRecord(line_id=2, content="mystery one"),
            LogRecord(line_id=3, content="mystery two"),
        ]
        outcome = match_all(records, [make_template("known thing")])
        path = tmp_path / "unmatched.txt"
        count = write_unmatched_report(outcome, records, path)
        assert count == 2
        assert path.read_text(encoding="utf-8").splitlines() == [
            "mystery one", "mystery two",
        ]
