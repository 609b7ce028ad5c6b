"""Hand-computed fixtures shared by unit and acceptance tests."""

from __future__ import annotations

from logbench.model import GroundTruth, LogRecord, ParseResult, Template


def worked_fixture() -> tuple[ParseResult, GroundTruth]:
    """The 10-message fixture.

    Ground truth: A = {1..8} "request <*> completed", B = {9} "disk full",
    C = {10} "reboot".  Parse: G1 = {1..8} with the exact text of A,
    G2 = {9, 10} with text "disk <*>".

    Hand computation: GA = 8/10, PA = 8/10; N_p = 2, N_c = 1, N_g = 3 so
    PGA = 1/2, RGA = 1/3, FGA = 0.4; G1 is homogeneous and token-exact so
    N̂_c = 1 and FTA = 0.4.
    """
    gt = GroundTruth(
        templates={
            "A": Template("A", "request <*> completed"),
            "B": Template("B", "disk full"),
            "C": Template("C", "reboot"),
        },
        assignment={**{i: "A" for i in range(1, 9)}, 9: "B", 10: "C"},
    )
    parse = ParseResult(
        templates={
            "G1": Template("G1", "request <*> completed"),
            "G2": Template("G2", "disk <*>"),
        },
        assignment={**{i: "G1" for i in range(1, 9)}, 9: "G2", 10: "G2"},
    )
    return parse, gt


def tie_break_templates() -> tuple[Template, Template]:
    """The two-template priority fixture.

    T1 has the longer static part; every message generated from T1 is also
    matchable by T2 (its trailing wildcard spans " ruser=..."), so priority
    must put T1 first.
    """
    t1 = Template("T1", "auth failure; logname=<*> uid=<*> ruser=<*>")
    t2 = Template("T2", "auth failure; logname=<*> uid=<*>")
    return t1, t2


def tie_break_messages(count: int = 50) -> list[LogRecord]:
    records = []
    for i in range(count):
        records.append(
            LogRecord(
                line_id=i + 1,
                content=f"auth failure; logname=user{i} uid={i} ruser=remote{i}",
            )
        )
    return records


def imbalance_fixture() -> tuple[ParseResult, GroundTruth]:
    """One 950-message template parsed perfectly plus 49 singletons merged
    into a single wrong group: GA stays high while FGA collapses.

    Closed form: GA = 950/999; N_p = 2, N_c = 1, N_g = 50, so
    FGA = 2*(0.5*0.02)/0.52 ≈ 0.0385.
    """
    gt_templates = {"H": Template("H", "heartbeat seq <*>")}
    gt_assignment = {i: "H" for i in range(1, 951)}
    for k in range(49):
        tid = f"R{k}"
        gt_templates[tid] = Template(tid, f"rare event {k} happened")
        gt_assignment[951 + k] = tid
    gt = GroundTruth(templates=gt_templates, assignment=gt_assignment)

    parse = ParseResult(
        templates={
            "P0": Template("P0", "heartbeat seq <*>"),
            "P1": Template("P1", "rare event <*> happened"),
        },
        assignment={
            **{i: "P0" for i in range(1, 951)},
            **{951 + k: "P1" for k in range(49)},
        },
    )
    return parse, gt
