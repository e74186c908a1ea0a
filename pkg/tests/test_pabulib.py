import pytest

from pbconsensus.errors import (
    DuplicateYear,
    EmptyHistory,
    MalformedRow,
    MissingSection,
    MixedDistricts,
    NonPositiveBudget,
    UnknownProjectReference,
)
from pbconsensus.pabulib import (
    dump_election,
    load_district_history,
    load_pb_dir,
    parse_election,
    split_attributes,
)


def test_parses_minimal_document(tiny_doc):
    inst = parse_election(tiny_doc)
    assert inst.district == "Testville"
    assert inst.year == 2023
    assert inst.budget == 700
    assert [p.id for p in inst.projects] == ["1", "2", "3"]
    assert {p.id: p.vote_count for p in inst.projects} == {"1": 2, "2": 1, "3": 0}
    assert inst.project_map["1"].attributes == {"education", "sport", "children"}
    assert inst.project_map["3"].attributes == {"adults"}
    assert [p.selected for p in inst.projects] == [True, False, False]


def test_vote_counts_come_from_ballots_not_projects_column(tiny_doc):
    doc = tiny_doc.replace("1;200;2;Park", "1;200;99;Park")
    assert parse_election(doc).project_map["1"].vote_count == 2


def test_unknown_project_reference(tiny_doc):
    with pytest.raises(UnknownProjectReference):
        parse_election(tiny_doc.replace("b;1\n", "b;99\n"))


def test_missing_section(tiny_doc):
    with pytest.raises(MissingSection):
        parse_election(tiny_doc.split("VOTES")[0])


def test_missing_budget_key(tiny_doc):
    with pytest.raises(MissingSection):
        parse_election(tiny_doc.replace("budget;700\n", ""))


def test_wrong_column_count_reports_line(tiny_doc):
    with pytest.raises(MalformedRow) as err:
        parse_election(tiny_doc.replace("2;300;1;Library;education;;0", "2;300;1"))
    assert err.value.line == 13


@pytest.mark.parametrize("budget", ["0", "-5"])
def test_non_positive_budget(tiny_doc, budget):
    with pytest.raises(NonPositiveBudget):
        parse_election(tiny_doc.replace("budget;700", f"budget;{budget}"))


def test_fractional_money_rejected(tiny_doc):
    with pytest.raises(MalformedRow):
        parse_election(tiny_doc.replace("1;200;", "1;200.5;"))


def test_decimal_money_with_zero_fraction_accepted(tiny_doc):
    assert parse_election(tiny_doc.replace("budget;700", "budget;700.00")).budget == 700


def test_crlf_and_bom(tiny_doc):
    inst = parse_election("﻿" + tiny_doc.replace("\n", "\r\n"))
    assert len(inst.ballots) == 2


def test_blank_vote_dropped(tiny_doc):
    inst = parse_election(tiny_doc + "c;\n")
    assert [b.voter_id for b in inst.ballots] == ["a", "b"]


def test_duplicate_voter_rejected(tiny_doc):
    with pytest.raises(MalformedRow):
        parse_election(tiny_doc + "a;2\n")


def test_split_attributes_normalizes():
    assert split_attributes(" Education, sport ,,") == {"education", "sport"}


def test_dump_round_trip(tiny_doc):
    inst = parse_election(tiny_doc)
    again = parse_election(dump_election(inst))
    assert again == inst


def _year(doc, year, district="Testville"):
    return doc.replace("year;2023", f"year;{year}").replace("district;Testville", f"district;{district}")


def test_history_of_four_years_sorted(tiny_doc):
    docs = [_year(tiny_doc, y) for y in (2021, 2019, 2022, 2020)]
    hist = load_district_history(docs)
    assert len(hist) == 4
    assert [i.year for i in hist.instances] == [2019, 2020, 2021, 2022]
    assert hist.latest.year == 2022


def test_history_single_file(tiny_doc):
    assert len(load_district_history([tiny_doc])) == 1


def test_history_mixed_districts(tiny_doc):
    with pytest.raises(MixedDistricts):
        load_district_history([tiny_doc, _year(tiny_doc, 2022, "Elsewhere")])


def test_history_duplicate_year(tiny_doc):
    with pytest.raises(DuplicateYear):
        load_district_history([tiny_doc, tiny_doc])


def test_history_empty():
    with pytest.raises(EmptyHistory):
        load_district_history([])


def test_load_dir_groups_by_district(tmp_path, tiny_doc):
    (tmp_path / "a.pb").write_text(_year(tiny_doc, 2020), encoding="utf-8")
    (tmp_path / "b.pb").write_text(_year(tiny_doc, 2021), encoding="utf-8")
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "c.pb").write_text(_year(tiny_doc, 2021, "Other"), encoding="utf-8")
    hists = load_pb_dir(tmp_path)
    assert sorted(hists) == ["Other", "Testville"]
    assert len(hists["Testville"]) == 2
    assert list(load_pb_dir(tmp_path, district="other")) == ["Other"]
