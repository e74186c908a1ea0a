"""Reader (and minimal writer) for the pabulib ``.pb`` election format.

A ``.pb`` file has three sections, ``META``, ``PROJECTS`` and ``VOTES``.
Each section starts with a semicolon-separated header row; ``META`` rows
are ``key;value`` pairs.  Only approval ballots are interpreted: score or
point columns in ``VOTES`` are ignored.
"""

from __future__ import annotations

import csv
import io
import re
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .errors import MalformedRow, MissingSection, NonPositiveBudget, UnknownProjectReference
from .model import Ballot, DistrictHistory, ElectionInstance, Project, sorted_ids

SECTIONS = ("META", "PROJECTS", "VOTES")
ATTRIBUTE_COLUMNS = ("category", "target")
_TRUE = {"1", "true", "yes", "y", "t"}


def _split_row(line: str) -> list[str]:
    return next(csv.reader([line], delimiter=";"))


def _to_int_money(raw: str, what: str, line: int) -> int:
    try:
        value = Decimal(raw.strip())
    except InvalidOperation:
        raise MalformedRow(f"{what} {raw!r} is not a number", line) from None
    if value != value.to_integral_value():
        raise MalformedRow(f"{what} {raw!r} is not a whole amount", line)
    return int(value)


def split_attributes(cell: str) -> set[str]:
    return {tag.strip().lower() for tag in cell.split(",") if tag.strip()}


def _sections(text: str) -> dict[str, list[tuple[int, str]]]:
    text = text.lstrip("﻿")
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.upper() in SECTIONS:
            current = line.upper()
            sections[current] = []
            continue
        if current is None:
            raise MalformedRow("content before the first section", lineno)
        sections[current].append((lineno, line))
    for name in SECTIONS:
        if name not in sections:
            raise MissingSection(f"section {name} is missing")
        if not sections[name]:
            raise MissingSection(f"section {name} has no header row")
    return sections


def _table(rows: list[tuple[int, str]], required: tuple[str, ...], section: str):
    header_line, header_raw = rows[0]
    header = [h.strip().lower() for h in _split_row(header_raw)]
    for col in required:
        if col not in header:
            raise MalformedRow(f"{section} header lacks column {col!r}", header_line)
    out = []
    for lineno, raw in rows[1:]:
        cells = _split_row(raw)
        if len(cells) != len(header):
            raise MalformedRow(
                f"{section} row has {len(cells)} columns, header has {len(header)}", lineno
            )
        out.append((lineno, dict(zip(header, (c.strip() for c in cells)))))
    return out


def _parse_meta(rows: list[tuple[int, str]]) -> dict[str, str]:
    meta: dict[str, str] = {}
    # The first META row is the "key;value" header.
    for lineno, raw in rows[1:]:
        cells = _split_row(raw)
        if len(cells) < 2:
            raise MalformedRow("META row must be key;value", lineno)
        meta[cells[0].strip().lower()] = ";".join(cells[1:]).strip()
    for key in ("budget", "num_projects"):
        if key not in meta:
            raise MissingSection(f"META lacks required key {key!r}")
    return meta


def _year_from_meta(meta: dict[str, str]) -> int:
    for key in ("year", "instance", "date_begin", "date_end"):
        m = re.search(r"\d{4}", meta.get(key, ""))
        if m:
            return int(m.group())
    return 0


def _district_from_meta(meta: dict[str, str]) -> str:
    for key in ("district", "subunit", "unit"):
        if meta.get(key):
            return meta[key]
    return ""


def parse_election(text: str) -> ElectionInstance:
    """Parse one pabulib document into a validated :class:`ElectionInstance`.

    Vote counts always come from the ``VOTES`` section; a ``votes`` column in
    ``PROJECTS`` is ignored.  Ballots whose ``vote`` cell is blank are dropped.
    """
    sections = _sections(text)
    meta = _parse_meta(sections["META"])
    budget_line = sections["META"][0][0]
    budget = _to_int_money(meta["budget"], "budget", budget_line)
    if budget <= 0:
        raise NonPositiveBudget(f"budget must be positive, got {budget}")

    projects: list[Project] = []
    seen: set[str] = set()
    for lineno, row in _table(sections["PROJECTS"], ("project_id", "cost"), "PROJECTS"):
        pid = row["project_id"]
        if not pid:
            raise MalformedRow("empty project_id", lineno)
        if pid in seen:
            raise MalformedRow(f"duplicate project_id {pid!r}", lineno)
        seen.add(pid)
        cost = _to_int_money(row["cost"], "cost", lineno)
        if cost < 0:
            raise MalformedRow(f"negative cost {cost}", lineno)
        attrs: set[str] = set()
        for col in ATTRIBUTE_COLUMNS:
            attrs |= split_attributes(row.get(col, ""))
        selected = row.get("selected", "").strip().lower() in _TRUE
        projects.append(
            Project(
                id=pid,
                cost=cost,
                attributes=frozenset(attrs),
                selected=selected,
                name=row.get("name", ""),
            )
        )

    ballots: list[Ballot] = []
    voters: set[str] = set()
    for lineno, row in _table(sections["VOTES"], ("voter_id", "vote"), "VOTES"):
        vid = row["voter_id"]
        if vid in voters:
            raise MalformedRow(f"duplicate voter_id {vid!r}", lineno)
        voters.add(vid)
        approved = frozenset(x.strip() for x in row["vote"].split(",") if x.strip())
        if not approved:
            continue
        unknown = approved - seen
        if unknown:
            raise UnknownProjectReference(
                f"line {lineno}: voter {vid!r} approves unknown project(s) {sorted_ids(unknown)}"
            )
        ballots.append(Ballot(voter_id=vid, approved=approved))

    instance = ElectionInstance(
        district=_district_from_meta(meta),
        year=_year_from_meta(meta),
        budget=budget,
        projects=tuple(projects),
        ballots=tuple(ballots),
        meta=tuple(meta.items()),
    )
    return instance.with_vote_counts()


def dump_election(instance: ElectionInstance) -> str:
    """Serialize an instance back to pabulib layout.

    All attribute tags are written to the ``category`` column, which parses
    back to the same attribute set.
    """
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=";", lineterminator="\n")
    meta = dict(instance.meta)
    meta.update(
        {
            "district": instance.district,
            "year": str(instance.year),
            "budget": str(instance.budget),
            "num_projects": str(len(instance.projects)),
            "num_votes": str(len(instance.ballots)),
            "vote_type": meta.get("vote_type", "approval"),
        }
    )
    buf.write("META\n")
    w.writerow(["key", "value"])
    for key, value in meta.items():
        w.writerow([key, value])
    buf.write("PROJECTS\n")
    w.writerow(["project_id", "cost", "votes", "name", "category", "selected"])
    for p in instance.projects:
        w.writerow(
            [p.id, p.cost, p.vote_count, p.name, ",".join(sorted(p.attributes)), int(p.selected)]
        )
    buf.write("VOTES\n")
    w.writerow(["voter_id", "vote"])
    for b in instance.ballots:
        w.writerow([b.voter_id, ",".join(sorted_ids(b.approved))])
    return buf.getvalue()


def history_from_instances(instances) -> DistrictHistory:
    instances = sorted(instances, key=lambda i: i.year)
    district = instances[0].district if instances else ""
    return DistrictHistory(district=district, instances=tuple(instances))


def load_district_history(documents: list[str]) -> DistrictHistory:
    """Parse several yearly documents of one district into a history sorted by year."""
    return history_from_instances([parse_election(doc) for doc in documents])


def read_pb_file(path: str | Path) -> ElectionInstance:
    return parse_election(Path(path).read_text(encoding="utf-8"))


def load_pb_dir(directory: str | Path, district: str | None = None) -> dict[str, DistrictHistory]:
    """Load every ``*.pb`` file below ``directory`` grouped into district histories.

    With ``district`` given, only that district is kept (matched case-insensitively).
    """
    groups: dict[str, list[ElectionInstance]] = {}
    for path in sorted(Path(directory).rglob("*.pb")):
        inst = read_pb_file(path)
        if district is not None and inst.district.lower() != district.lower():
            continue
        groups.setdefault(inst.district, []).append(inst)
    return {name: history_from_instances(insts) for name, insts in sorted(groups.items())}
