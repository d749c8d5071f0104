"""Rule-based group tagging and markedness comparison pools.

Group membership comes from metadata property rules and/or category
patterns. Category include patterns support conjunction: a pattern is
either one regex or a list of regexes that must all match the same
category. An exclude pattern vetoes only the specific category it matches,
not the whole article. Gender can fall back to pronoun counting for
articles without the relevant property.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Article, Corpus
from .errors import ConfigError, DataError

MALE_PRONOUNS = frozenset({"he", "him", "his", "himself"})
FEMALE_PRONOUNS = frozenset({"she", "her", "hers", "herself"})

GENDER_MAN = "man"
GENDER_WOMAN = "woman"
GENDER_UNDETERMINED = "undetermined"


def _compile(pattern: str, where: str) -> re.Pattern:
    try:
        return re.compile(pattern, re.IGNORECASE)
    except re.error as exc:
        raise ConfigError(f"invalid pattern {pattern!r} in {where}: {exc}") from exc


@dataclass
class MarkednessSpec:
    """Comparison-pool rule: required pattern plus disqualifying patterns."""

    must_contain: str
    must_not_contain: tuple[str, ...] = ()

    def compiled(self, name: str):
        return (
            _compile(self.must_contain, f"{name}.must_contain"),
            [_compile(p, f"{name}.must_not_contain") for p in self.must_not_contain],
        )


@dataclass
class GroupRuleSet:
    name: str
    property_rules: tuple[tuple[str, frozenset[str]], ...] = ()
    category_include_patterns: tuple = ()  # regex str, or list/tuple of regex str (AND)
    category_exclude_patterns: tuple[str, ...] = ()
    comparison_pool_rules: MarkednessSpec | None = None
    pronoun_fallback: bool = False
    pronoun_class: str | None = None  # "man" | "woman", used with pronoun_fallback

    def __post_init__(self):
        if not self.name:
            raise ConfigError("rule set needs a name")
        # compile eagerly so bad patterns fail at load time
        self._includes = []
        for pat in self.category_include_patterns:
            terms = [pat] if isinstance(pat, str) else list(pat)
            self._includes.append(
                [_compile(t, f"{self.name}.include") for t in terms]
            )
        self._excludes = [
            _compile(p, f"{self.name}.exclude") for p in self.category_exclude_patterns
        ]
        if self.comparison_pool_rules is not None:
            self.comparison_pool_rules.compiled(self.name)

    def category_matches(self, category: str) -> bool:
        """True if some include pattern matches and no exclude vetoes this category."""
        for terms in self._includes:
            if all(t.search(category) for t in terms):
                if not any(e.search(category) for e in self._excludes):
                    return True
        return False

    def property_matches(self, a: Article) -> str | None:
        for key, required in self.property_rules:
            have = a.properties.get(key)
            if have and have & required:
                return key
        return None


@dataclass
class GroupAssignment:
    groups: dict[str, set[str]] = field(default_factory=dict)  # id -> group names
    provenance: dict[str, dict[str, str]] = field(default_factory=dict)

    def members(self, group: str) -> set[str]:
        return {aid for aid, gs in self.groups.items() if group in gs}

    def tagged_ids(self) -> set[str]:
        return {aid for aid, gs in self.groups.items() if gs}

    def assign(self, aid: str, group: str, via: str) -> None:
        self.groups.setdefault(aid, set()).add(group)
        self.provenance.setdefault(aid, {}).setdefault(group, via)


def infer_gender_by_pronouns(a: Article) -> str:
    """Majority pronoun class; undetermined on a tie or no pronouns at all."""
    counts = Counter()
    for tok in a.tokens:
        low = tok.lower()
        if low in MALE_PRONOUNS:
            counts["m"] += 1
        elif low in FEMALE_PRONOUNS:
            counts["f"] += 1
    if counts["m"] > counts["f"]:
        return GENDER_MAN
    if counts["f"] > counts["m"]:
        return GENDER_WOMAN
    return GENDER_UNDETERMINED


def tag_by_rules(corpus: Corpus, rules) -> GroupAssignment:
    """Assign every article to all rule sets it satisfies (non-exclusive)."""
    assignment = GroupAssignment()
    for a in corpus:
        for rs in rules:
            key = rs.property_matches(a)
            if key is not None:
                assignment.assign(a.id, rs.name, f"property:{key}")
                continue
            hit = next((c for c in sorted(a.categories) if rs.category_matches(c)), None)
            if hit is not None:
                assignment.assign(a.id, rs.name, f"category:{hit}")
                continue
            if rs.pronoun_fallback and rs.pronoun_class:
                keys = {k for k, _ in rs.property_rules}
                if not keys & set(a.properties):
                    if infer_gender_by_pronouns(a) == rs.pronoun_class:
                        assignment.assign(a.id, rs.name, "pronouns")
    return assignment


def build_comparison_pool(
    corpus: Corpus, rules: GroupRuleSet, target_assignment: GroupAssignment
) -> Corpus:
    """Unmarked candidate pool: must-contain pattern holds, no marked category,
    and the article belongs to no target group."""
    if rules.comparison_pool_rules is None:
        raise ConfigError(f"rule set {rules.name!r} has no comparison pool spec")
    must, must_not = rules.comparison_pool_rules.compiled(rules.name)
    barred = target_assignment.tagged_ids()
    pool = []
    for a in corpus:
        if a.id in barred:
            continue
        if not any(must.search(c) for c in a.categories):
            continue
        if any(m.search(c) for c in a.categories for m in must_not):
            continue
        pool.append(a)
    if not pool:
        raise DataError(f"comparison pool for {rules.name!r} is empty")
    return Corpus(pool)


def validate_against_reference(
    assignment: GroupAssignment, reference: dict[str, set[str]]
) -> tuple[float | None, float]:
    """Micro precision/recall of the tagging restricted to reference ids."""
    if not reference:
        raise DataError("empty reference")
    tp = fp = fn = 0
    for aid, ref_labels in reference.items():
        got = assignment.groups.get(aid, set())
        tp += len(got & ref_labels)
        fp += len(got - ref_labels)
        fn += len(ref_labels - got)
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    return precision, recall


def load_rules(path) -> list[GroupRuleSet]:
    """Parse a rule configuration file (JSON document, one object per rule set)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read rules file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"rules file {path} is not valid JSON: {exc}") from exc

    entries = doc["rules"] if isinstance(doc, dict) else doc
    out, seen = [], set()
    for entry in entries:
        name = entry.get("name", "")
        if name in seen:
            raise ConfigError(f"duplicate rule set name {name!r}")
        seen.add(name)
        pool = entry.get("comparison_pool_rules")
        spec = (
            MarkednessSpec(
                must_contain=pool["must_contain"],
                must_not_contain=tuple(pool.get("must_not_contain", ())),
            )
            if pool
            else None
        )
        out.append(
            GroupRuleSet(
                name=name,
                property_rules=tuple(
                    (k, frozenset(v)) for k, v in entry.get("property_rules", ())
                ),
                category_include_patterns=tuple(
                    tuple(p) if isinstance(p, list) else p
                    for p in entry.get("category_include_patterns", ())
                ),
                category_exclude_patterns=tuple(
                    entry.get("category_exclude_patterns", ())
                ),
                comparison_pool_rules=spec,
                pronoun_fallback=bool(entry.get("pronoun_fallback", False)),
                pronoun_class=entry.get("pronoun_class"),
            )
        )
    return out
