"""Sampling-based corpus cleaning.

A seeded, stratified sample of generated records goes to a human reviewer;
their accept/edit/flag decisions land in an append-only log; recurring edits
compile into replace rules and relevance flags into drop rules; the rules
then propagate to the non-sampled remainder of the corpus.

The decision log is the source of truth. The session object is derived state
and can always be rebuilt by replaying the log.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
import os
import random
import re
import time
from dataclasses import dataclass, field, replace as dc_replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .records import InstructionRecord, Turn, record_to_json

logger = logging.getLogger(__name__)

DEFAULT_RATIO = 0.2
DEFAULT_RULE_THRESHOLD = 2


class CleaningError(ValueError):
    """Raised for invalid decisions, foreign record ids, or bad rules."""


class IssueTag(Enum):
    COMPLETENESS = "completeness"
    RELEVANCE = "relevance"
    CLARITY = "clarity"


class Verdict(Enum):
    ACCEPT = "accept"
    EDIT = "edit"
    FLAG = "flag"


@dataclass(frozen=True)
class ReviewDecision:
    """One reviewer verdict on one sampled record. Edits must carry the
    replacement assistant text; flags must name at least one issue."""

    record_id: str
    verdict: Verdict
    issues: Tuple[IssueTag, ...] = ()
    edited_text: Optional[str] = None
    note: str = ""
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if self.verdict is Verdict.EDIT:
            if not self.edited_text or not self.edited_text.strip():
                raise CleaningError(f"edit decision on {self.record_id!r} needs edited_text")
            if "\n" in self.edited_text:
                raise CleaningError(f"edited_text for {self.record_id!r} must be a single line")
        if self.verdict is Verdict.FLAG and not self.issues:
            raise CleaningError(f"flag decision on {self.record_id!r} needs at least one issue")


def decision_to_json(decision: ReviewDecision) -> Dict[str, object]:
    return {
        "record_id": decision.record_id,
        "verdict": decision.verdict.value,
        "issues": [tag.value for tag in decision.issues],
        "edited_text": decision.edited_text,
        "note": decision.note,
        "timestamp": decision.timestamp,
    }


def decision_from_json(obj: Dict[str, object]) -> ReviewDecision:
    try:
        return ReviewDecision(
            record_id=str(obj["record_id"]),
            verdict=Verdict(obj["verdict"]),
            issues=tuple(IssueTag(tag) for tag in obj.get("issues", ())),
            edited_text=obj.get("edited_text"),
            note=str(obj.get("note", "")),
            timestamp=float(obj.get("timestamp", 0.0)),
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, CleaningError):
            raise
        raise CleaningError(f"bad decision object: {exc}") from exc


@dataclass(frozen=True)
class CleaningRule:
    """A compiled correction. Replace rules rewrite a literal phrase at word
    boundaries in assistant text; drop rules remove every record generated
    from one template."""

    rule_id: str
    action: str  # "replace" | "drop_record"
    match: str  # phrase for replace, template_id for drop
    replacement: Optional[str] = None
    origin: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.action not in ("replace", "drop_record"):
            raise CleaningError(f"unknown rule action {self.action!r}")
        if not self.match:
            raise CleaningError("rule match must be non-empty")
        if self.action == "replace":
            if self.replacement is None:
                raise CleaningError("replace rule needs a replacement")
            # A rule whose replacement still matches its own pattern would
            # grow text without bound; refuse it outright.
            if self.pattern().search(self.replacement):
                raise CleaningError(
                    f"replace rule {self.match!r} -> {self.replacement!r} is not idempotent"
                )

    def pattern(self) -> "re.Pattern[str]":
        return re.compile(r"(?<!\w)" + re.escape(self.match) + r"(?!\w)")


def rule_to_json(rule: CleaningRule) -> Dict[str, object]:
    return {
        "rule_id": rule.rule_id,
        "action": rule.action,
        "match": rule.match,
        "replacement": rule.replacement,
        "origin": list(rule.origin),
    }


def rule_from_json(obj: Dict[str, object]) -> CleaningRule:
    return CleaningRule(
        rule_id=str(obj["rule_id"]),
        action=str(obj["action"]),
        match=str(obj["match"]),
        replacement=obj.get("replacement"),
        origin=tuple(obj.get("origin", ())),
    )


@dataclass
class ReviewSession:
    """Derived review state: the sample order plus the decisions so far."""

    corpus_digest: str
    sample: Tuple[str, ...]
    seed: int
    ratio: float
    decisions: Dict[str, ReviewDecision] = field(default_factory=dict)

    def undecided(self) -> List[str]:
        return [rid for rid in self.sample if rid not in self.decisions]

    @property
    def cursor(self) -> int:
        for i, rid in enumerate(self.sample):
            if rid not in self.decisions:
                return i
        return len(self.sample)

    def next_undecided(self) -> Optional[str]:
        remaining = self.undecided()
        return remaining[0] if remaining else None


def corpus_digest(records: Sequence[InstructionRecord]) -> str:
    hasher = hashlib.sha256()
    for record in records:
        hasher.update(json.dumps(record_to_json(record), sort_keys=True).encode("utf-8"))
        hasher.update(b"\n")
    return hasher.hexdigest()


def sample_for_review(
    records: Sequence[InstructionRecord], ratio: float = DEFAULT_RATIO, seed: int = 0
) -> ReviewSession:
    """Seeded sample of ceil(ratio * N) records, stratified so every
    (paradigm, subtask) stratum contributes its share within one record.

    Per-stratum quotas come from largest-remainder apportionment of the
    total, which keeps each at floor or ceil of ratio * stratum size.
    """
    if not records:
        raise CleaningError("cannot sample an empty corpus")
    if not 0.0 < ratio <= 1.0:
        raise CleaningError("ratio must be in (0, 1]")
    target = math.ceil(ratio * len(records))

    strata: Dict[str, List[str]] = {}
    for record in records:
        key = f"{record.paradigm.value}/{record.subtask.value}"
        strata.setdefault(key, []).append(record.record_id)

    keys = sorted(strata)
    floors = {k: math.floor(ratio * len(strata[k])) for k in keys}
    remainders = sorted(
        keys, key=lambda k: (-(ratio * len(strata[k]) - floors[k]), k)
    )
    quotas = dict(floors)
    short = target - sum(floors.values())
    while short > 0:
        grew = False
        for k in remainders:
            if short > 0 and quotas[k] < len(strata[k]):
                quotas[k] += 1
                short -= 1
                grew = True
        if not grew:
            break

    picked: List[str] = []
    for k in keys:
        members = sorted(strata[k])
        random.Random(f"{seed}:{k}").shuffle(members)
        picked.extend(members[: quotas[k]])
    random.Random(f"{seed}:order").shuffle(picked)
    return ReviewSession(
        corpus_digest=corpus_digest(records),
        sample=tuple(picked),
        seed=seed,
        ratio=ratio,
    )


def record_decision(
    session: ReviewSession, decision: ReviewDecision, log_path: Optional[Path] = None
) -> ReviewSession:
    """Store one decision, last write wins. When a log path is given the
    decision is durably appended before the in-memory state changes."""
    if decision.record_id not in set(session.sample):
        raise CleaningError(f"record {decision.record_id!r} is not in the review sample")
    if log_path is not None:
        append_decision(log_path, decision)
    session.decisions[decision.record_id] = decision
    return session


def append_decision(log_path: Path, decision: ReviewDecision) -> None:
    log_path = Path(log_path)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    with open(log_path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(decision_to_json(decision), sort_keys=True) + "\n")
        handle.flush()
        os.fsync(handle.fileno())


def replay_decisions(session: ReviewSession, log_path: Path) -> ReviewSession:
    """Rebuild decision state from the append-only log."""
    log_path = Path(log_path)
    if not log_path.exists():
        return session
    with open(log_path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                decision = decision_from_json(json.loads(line))
            except (json.JSONDecodeError, CleaningError) as exc:
                raise CleaningError(f"decision log line {lineno}: {exc}") from exc
            record_decision(session, decision)
    return session


def save_session_meta(meta_path: Path, session: ReviewSession) -> None:
    meta_path = Path(meta_path)
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "corpus_digest": session.corpus_digest,
        "sample": list(session.sample),
        "seed": session.seed,
        "ratio": session.ratio,
    }
    tmp = meta_path.with_suffix(meta_path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, meta_path)


def load_session(meta_path: Path, log_path: Optional[Path] = None) -> ReviewSession:
    obj = json.loads(Path(meta_path).read_text(encoding="utf-8"))
    session = ReviewSession(
        corpus_digest=str(obj["corpus_digest"]),
        sample=tuple(obj["sample"]),
        seed=int(obj["seed"]),
        ratio=float(obj["ratio"]),
    )
    if log_path is not None:
        replay_decisions(session, log_path)
    return session


def _contiguous_substitution(original: str, edited: str) -> Optional[Tuple[str, str]]:
    """The single word-level phrase swap turning original into edited, if the
    whole diff is one contiguous run of words on both sides."""
    old_words = original.split()
    new_words = edited.split()
    if old_words == new_words:
        return None
    prefix = 0
    limit = min(len(old_words), len(new_words))
    while prefix < limit and old_words[prefix] == new_words[prefix]:
        prefix += 1
    suffix = 0
    while (
        suffix < limit - prefix
        and old_words[len(old_words) - 1 - suffix] == new_words[len(new_words) - 1 - suffix]
    ):
        suffix += 1
    old_span = old_words[prefix : len(old_words) - suffix]
    new_span = new_words[prefix : len(new_words) - suffix]
    if not old_span or not new_span:
        return None  # pure insertion or deletion; no safe literal anchor
    return " ".join(old_span), " ".join(new_span)


def compile_rules(
    session: ReviewSession,
    records: Sequence[InstructionRecord],
    threshold: int = DEFAULT_RULE_THRESHOLD,
) -> List[CleaningRule]:
    """Turn the session's decisions into propagatable rules.

    An edit whose diff is one contiguous phrase substitution seen in at least
    `threshold` sampled records becomes a replace rule. A relevance flag on a
    templated record becomes a drop rule for that template.
    """
    by_id = {record.record_id: record for record in records}
    substitutions: Dict[Tuple[str, str], List[str]] = {}
    drop_origins: Dict[str, List[str]] = {}

    for rid in session.sample:
        decision = session.decisions.get(rid)
        record = by_id.get(rid)
        if decision is None or record is None:
            continue
        if decision.verdict is Verdict.EDIT:
            pair = _contiguous_substitution(record.last_answer(), decision.edited_text or "")
            if pair is not None:
                substitutions.setdefault(pair, []).append(rid)
        elif decision.verdict is Verdict.FLAG and IssueTag.RELEVANCE in decision.issues:
            if record.template_id:
                drop_origins.setdefault(record.template_id, []).append(rid)

    rules: List[CleaningRule] = []
    counter = 0
    for (old, new), origins in sorted(substitutions.items()):
        if len(origins) < threshold:
            continue
        counter += 1
        try:
            rules.append(
                CleaningRule(
                    rule_id=f"replace-{counter:03d}",
                    action="replace",
                    match=old,
                    replacement=new,
                    origin=tuple(sorted(origins)),
                )
            )
        except CleaningError as exc:
            logger.warning("skipping non-idempotent rule: %s", exc)
    for template_id, origins in sorted(drop_origins.items()):
        rules.append(
            CleaningRule(
                rule_id=f"drop-{template_id}",
                action="drop_record",
                match=template_id,
                origin=tuple(sorted(origins)),
            )
        )
    return rules


@dataclass(frozen=True)
class ChangeEntry:
    record_id: str
    action: str  # edit-decision | drop-decision | replace-rule | drop-rule
    rule_ids: Tuple[str, ...] = ()
    before: Optional[str] = None
    after: Optional[str] = None


@dataclass(frozen=True)
class ConflictEntry:
    record_id: str
    rule_ids: Tuple[str, ...]
    reason: str


@dataclass
class ChangeLog:
    """Every record the pass touched, plus rule conflicts left unresolved."""

    changes: List[ChangeEntry] = field(default_factory=list)
    conflicts: List[ConflictEntry] = field(default_factory=list)

    def as_json(self) -> Dict[str, object]:
        return {
            "changes": [
                {
                    "record_id": c.record_id,
                    "action": c.action,
                    "rule_ids": list(c.rule_ids),
                    "before": c.before,
                    "after": c.after,
                }
                for c in self.changes
            ],
            "conflicts": [
                {"record_id": c.record_id, "rule_ids": list(c.rule_ids), "reason": c.reason}
                for c in self.conflicts
            ],
        }


def _with_answer(record: InstructionRecord, text: str) -> InstructionRecord:
    turns = list(record.turns)
    turns[-1] = Turn.make(turns[-1].role, text)
    return dc_replace(record, turns=tuple(turns))


_MAX_ORDER_CHECK = 5


def _apply_replace_rules(
    text: str, rules: List[CleaningRule]
) -> Tuple[Optional[str], Optional[str]]:
    """(new text, None) on success; (None, reason) when the matching rules
    conflict and the record must stay untouched.

    Conflict means the outcome depends on application order, or some rule
    still matches the final text (a rewrite recreated a pattern), either of
    which would break idempotence.
    """
    matching = [rule for rule in rules if rule.pattern().search(text)]
    if not matching:
        return text, None
    if len(matching) > _MAX_ORDER_CHECK:
        return None, f"{len(matching)} overlapping rules; refusing to pick an order"

    def run(order: Sequence[CleaningRule]) -> str:
        out = text
        for rule in order:
            out = rule.pattern().sub(lambda _m: rule.replacement or "", out)
        return out

    results = {run(order) for order in itertools.permutations(matching)}
    if len(results) > 1:
        return None, "rule outcome depends on application order"
    final = results.pop()
    if any(rule.pattern().search(final) for rule in rules):
        return None, "rewrite recreates a rule pattern"
    return final, None


def apply_rules(
    records: Sequence[InstructionRecord],
    rules: Sequence[CleaningRule],
    session: ReviewSession,
) -> Tuple[List[InstructionRecord], ChangeLog]:
    """Propagate the cleaning pass over the corpus.

    Sampled records take their explicit decisions (edits applied, flags
    dropped); rules touch non-sampled records only. Idempotent on its own
    output: conflicted records are left byte-identical and logged.
    """
    sampled = set(session.sample)
    replace_rules = sorted(
        (r for r in rules if r.action == "replace"), key=lambda r: r.rule_id
    )
    drop_templates = {
        r.match: r.rule_id for r in rules if r.action == "drop_record"
    }

    out: List[InstructionRecord] = []
    log = ChangeLog()
    for record in records:
        rid = record.record_id
        if rid in sampled:
            decision = session.decisions.get(rid)
            if decision is None or decision.verdict is Verdict.ACCEPT:
                out.append(record)
            elif decision.verdict is Verdict.FLAG:
                log.changes.append(ChangeEntry(rid, "drop-decision", before=record.last_answer()))
            else:
                before = record.last_answer()
                if decision.edited_text != before:
                    out.append(_with_answer(record, decision.edited_text or ""))
                    log.changes.append(
                        ChangeEntry(rid, "edit-decision", before=before, after=decision.edited_text)
                    )
                else:
                    out.append(record)
            continue

        if record.template_id and record.template_id in drop_templates:
            log.changes.append(
                ChangeEntry(
                    rid,
                    "drop-rule",
                    rule_ids=(drop_templates[record.template_id],),
                    before=record.last_answer(),
                )
            )
            continue

        before = record.last_answer()
        after, conflict = _apply_replace_rules(before, replace_rules)
        if conflict is not None:
            matching = tuple(r.rule_id for r in replace_rules if r.pattern().search(before))
            log.conflicts.append(ConflictEntry(rid, matching, conflict))
            out.append(record)
        elif after != before:
            applied = tuple(r.rule_id for r in replace_rules if r.pattern().search(before))
            out.append(_with_answer(record, after))
            log.changes.append(
                ChangeEntry(rid, "replace-rule", rule_ids=applied, before=before, after=after)
            )
        else:
            out.append(record)
    return out, log


def make_decision(
    record_id: str,
    verdict: str,
    issues: Sequence[str] = (),
    edited_text: Optional[str] = None,
    note: str = "",
    timestamp: Optional[float] = None,
) -> ReviewDecision:
    """Convenience constructor from plain strings (CLI and HTTP layers)."""
    try:
        parsed_verdict = Verdict(verdict)
        parsed_issues = tuple(IssueTag(tag) for tag in issues)
    except ValueError as exc:
        raise CleaningError(str(exc)) from exc
    return ReviewDecision(
        record_id=record_id,
        verdict=parsed_verdict,
        issues=parsed_issues,
        edited_text=edited_text,
        note=note,
        timestamp=time.time() if timestamp is None else timestamp,
    )
