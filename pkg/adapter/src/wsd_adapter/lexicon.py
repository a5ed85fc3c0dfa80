"""Rule lexicon: a hand-editable sense tagger definition.

The file is a JSON object mapping each lemma to a default sense plus an
ordered rule list. A rule pairs a set of lowercase trigger words with a
sense id; the first rule whose triggers intersect the sentence context
wins, otherwise the default applies.

Example:

    {
      "bank": {
        "default": "bank.fin",
        "rules": [
          [["river", "muddy", "water"], "bank.river"],
          [["loan", "money"], "bank.fin"]
        ]
      }
    }
"""

import json
from dataclasses import dataclass
from pathlib import Path


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class SenseRule:
    triggers: frozenset[str]
    sense: str


@dataclass(frozen=True)
class RuleLexicon:
    rules: dict[str, tuple[SenseRule, ...]]
    defaults: dict[str, str]

    def lemmas(self) -> frozenset[str]:
        return frozenset(self.defaults)

    def sense_for(self, lemma: str, context: set[str]) -> str:
        """Resolve the sense of `lemma` given the other lemmas in the
        sentence. First matching rule wins; falls back to the default."""
        for rule in self.rules.get(lemma, ()):
            if rule.triggers & context:
                return rule.sense
        return self.defaults[lemma]


def _check_sense(sense: object, lemma: str) -> str:
    if not isinstance(sense, str) or not sense or any(c.isspace() for c in sense):
        raise LexiconError(f"invalid sense id {sense!r} for lemma {lemma!r}")
    return sense


def load_lexicon(path: str | Path) -> RuleLexicon:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise LexiconError("lexicon must be a JSON object")

    rules: dict[str, tuple[SenseRule, ...]] = {}
    defaults: dict[str, str] = {}
    for lemma, entry in raw.items():
        if lemma != lemma.lower():
            raise LexiconError(f"lemma {lemma!r} must be lowercase")
        if not isinstance(entry, dict) or "default" not in entry:
            raise LexiconError(f"lemma {lemma!r} needs a 'default' sense")
        defaults[lemma] = _check_sense(entry["default"], lemma)
        parsed = []
        for item in entry.get("rules", []):
            try:
                triggers, sense = item
            except (TypeError, ValueError):
                raise LexiconError(f"malformed rule for lemma {lemma!r}") from None
            if not isinstance(triggers, list) or not triggers:
                raise LexiconError(f"rule for {lemma!r} needs a trigger list")
            for trigger in triggers:
                if not isinstance(trigger, str) or trigger != trigger.lower():
                    raise LexiconError(
                        f"trigger {trigger!r} for {lemma!r} must be lowercase"
                    )
            parsed.append(
                SenseRule(triggers=frozenset(triggers), sense=_check_sense(sense, lemma))
            )
        rules[lemma] = tuple(parsed)
    return RuleLexicon(rules=rules, defaults=defaults)
