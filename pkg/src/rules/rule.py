"""Horn rules, per-head rule lists and the rule file format."""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

import structlog

from ..errors import ParseError
from ..kg.store import Vocabulary


logger = structlog.get_logger()

_ATOM = re.compile(r"([^\s(),]+)\(\s*([^\s(),]+)\s*,\s*([^\s(),]+)\s*\)")
HEAD_MARKER = "# head:"


@dataclass(frozen=True)
class Rule:
    """body_1(A, z1) ∧ ... ∧ body_m(z_{m-1}, B) ⟹ head(A, B) with confidence."""
    head: int
    body: tuple[int, ...]
    confidence: float

    @property
    def length(self) -> int:
        return len(self.body)

    def sort_key(self) -> tuple:
        return (-self.confidence, self.body)


def sort_rules(rules: Iterable[Rule]) -> list[Rule]:
    """Descending confidence, ties broken by lexicographic body."""
    return sorted(rules, key=Rule.sort_key)


@dataclass
class RuleList:
    """Rules grouped by head; relation ids index `relations`."""
    relations: tuple[str, ...]
    by_head: dict[int, list[Rule]] = field(default_factory=dict)

    def set_head(self, head: int, rules: Iterable[Rule]) -> None:
        self.by_head[head] = sort_rules(rules)

    def for_head(self, head: int) -> list[Rule]:
        return self.by_head.get(head, [])

    def heads(self) -> list[int]:
        return sorted(self.by_head)

    def __iter__(self) -> Iterator[Rule]:
        for head in self.heads():
            yield from self.by_head[head]

    def __len__(self) -> int:
        return sum(len(rules) for rules in self.by_head.values())

    def name(self, relation: int) -> str:
        return self.relations[relation]


def format_rule(rule: Rule, relations: tuple[str, ...]) -> str:
    """`head(A, B) <- b1(A, z1), b2(z1, B)`."""
    m = len(rule.body)
    variables = ["A"] + [f"z{i}" for i in range(1, m)] + ["B"]
    atoms = [
        f"{relations[r]}({variables[i]}, {variables[i + 1]})" for i, r in enumerate(rule.body)
    ]
    return f"{relations[rule.head]}(A, B) <- {', '.join(atoms)}"


def write_rules(rules: RuleList, path: str | Path) -> None:
    """Write one `confidence<TAB>rule` line per rule, heads in id order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for head in rules.heads():
            f.write(f"{HEAD_MARKER} {rules.name(head)}\n")
            for rule in rules.for_head(head):
                f.write(f"{rule.confidence:.6f}\t{format_rule(rule, rules.relations)}\n")
    logger.info("rules_written", path=str(path), heads=len(rules.heads()), rules=len(rules))


def read_rules(path: str | Path, vocab: Optional[Vocabulary] = None) -> RuleList:
    """Parse a rule file.

    With a vocabulary, relation names resolve to its ids and unknown names
    are a ParseError; without one, ids are assigned in first-seen order.
    """
    path = Path(path)
    names: list[str] = list(vocab.relations) if vocab is not None else []
    index = {name: i for i, name in enumerate(names)}

    def relation(name: str, line_number: int) -> int:
        if name not in index:
            if vocab is not None:
                raise ParseError(f"unknown relation {name!r}", path=str(path), line_number=line_number)
            index[name] = len(names)
            names.append(name)
        return index[name]

    grouped: dict[int, list[Rule]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            confidence_text, sep, text = line.partition("\t")
            if not sep or "<-" not in text:
                raise ParseError("expected `confidence<TAB>head(A, B) <- body`", path=str(path), line_number=line_number)
            try:
                confidence = float(confidence_text)
            except ValueError:
                raise ParseError(f"bad confidence {confidence_text!r}", path=str(path), line_number=line_number) from None

            head_text, body_text = (part.strip() for part in text.split("<-", 1))
            head_atom = _ATOM.fullmatch(head_text)
            body_atoms = _ATOM.findall(body_text)
            if head_atom is None or not body_atoms:
                raise ParseError("malformed rule", path=str(path), line_number=line_number)
            variables = [body_atoms[0][1]] + [atom[2] for atom in body_atoms]
            if any(atom[1] != variables[i] for i, atom in enumerate(body_atoms)) or (
                variables[0], variables[-1]
            ) != (head_atom.group(2), head_atom.group(3)):
                raise ParseError("body is not a chain from A to B", path=str(path), line_number=line_number)

            head = relation(head_atom.group(1), line_number)
            body = tuple(relation(atom[0], line_number) for atom in body_atoms)
            grouped.setdefault(head, []).append(Rule(head, body, confidence))

    rules = RuleList(tuple(names))
    for head, head_rules in grouped.items():
        rules.set_head(head, head_rules)
    logger.info("rules_loaded", path=str(path), heads=len(grouped), rules=len(rules))
    return rules
