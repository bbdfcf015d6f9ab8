"""Seeded synthetic news-snippet corpus with word-level bias annotations.

Rows mimic the crowd-annotated media-bias CSVs this package ingests: a
sentence of news prose, a binary label, the annotated loaded phrases, and
outlet metadata. Label noise and vocabulary overlap between the classes
are injected on purpose so shallow classifiers land in a realistic
mid-60s F1 band instead of memorizing a clean separator. Generation is
fully deterministic per seed.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path

from .dataset import DatasetRecord, Label

LOADED_PHRASES = [
    "pseudo-scientific hype",
    "radical agenda",
    "so-called experts",
    "disastrous policy",
    "corrupt elites",
    "alarmist rhetoric",
    "reckless scheme",
    "extremist talking points",
    "shameless pandering",
    "blatant propaganda",
    "fearmongering",
    "cronies",
    "witch hunt",
    "absurd claims",
    "dangerous nonsense",
    "self-serving bureaucrats",
    "outrageous overreach",
    "hysterical coverage",
    "cynical ploy",
    "crooked insiders",
    "delusional",
    "toxic spin",
    "shadowy donors",
    "hack journalists",
    "manufactured outrage",
    "partisan hatchet job",
    "naked power grab",
    "junk science",
    "sham investigation",
    "pet project",
]

# Mild evaluative words that also show up in non-biased prose, so the two
# classes share vocabulary.
AMBIGUOUS_WORDS = [
    "controversial",
    "sweeping",
    "unprecedented",
    "sharp",
    "surprising",
    "heated",
    "ambitious",
    "costly",
    "divisive",
    "dramatic",
]

TOPICS = {
    "politics": ["the election bill", "the new voting law", "the senate hearing", "the budget deal"],
    "climate": ["the climate report", "the emissions plan", "tornado activity", "the drought response"],
    "economy": ["the inflation data", "the jobs report", "the trade agreement", "the interest rate cut"],
    "health": ["the vaccine rollout", "the hospital funding", "the new health study", "the drug pricing rule"],
    "technology": ["the privacy bill", "the social media ban", "the broadband program", "the AI guidelines"],
    "immigration": ["the border measure", "the visa program", "the asylum ruling", "the refugee quota"],
    "education": ["the school curriculum", "the tuition plan", "the testing mandate", "the teacher contract"],
    "crime": ["the sentencing reform", "the police budget", "the bail ruling", "the fraud case"],
}

SOURCES = [
    "Daily Chronicle",
    "Metro Ledger",
    "National Wire",
    "Evening Standard-Herald",
    "The Capital Observer",
    "Riverside Gazette",
    "The Plainfield Courier",
    "Coastal Tribune",
]

NEUTRAL_TEMPLATES = [
    "Lawmakers reviewed {subject} during a session on {day}.",
    "Officials said {subject} will be discussed again next {day}.",
    "A committee released its findings on {subject} this week.",
    "Analysts published new figures about {subject} on {day}.",
    "The governor's office confirmed a timeline for {subject}.",
    "Residents attended a public meeting about {subject}.",
    "The agency announced an update on {subject} after the vote.",
    "Researchers presented data on {subject} at the conference.",
    "Both parties requested more time to study {subject}.",
    "The court scheduled arguments over {subject} for next month.",
    "Reporters asked about {subject} at the {day} briefing.",
    "A spokesperson outlined the next steps for {subject}.",
]

NEUTRAL_AMBIGUOUS_TEMPLATES = [
    "Observers called {subject} a {amb} step for the region.",
    "The {amb} debate over {subject} continued on {day}.",
    "Coverage of {subject} drew {amb} attention this week.",
    "Supporters described {subject} as {amb} but necessary.",
]

BIASED_TEMPLATES = [
    "Don't buy the {loaded} about {subject}.",
    "Critics say {subject} is nothing but {loaded}.",
    "The {loaded} behind {subject} fooled nobody on {day}.",
    "Once again, {subject} exposes the {loaded} running the capital.",
    "Backers of {subject} leaned on {loaded} to dodge real questions.",
    "Anyone defending {subject} is peddling {loaded}.",
    "{subject} is a textbook case of {loaded}, insiders admit.",
    "Voters saw through the {loaded} wrapped around {subject}.",
]

BIASED_TWO_PHRASE_TEMPLATES = [
    "The {loaded} around {subject} is classic {loaded2}.",
    "Between the {loaded} and the {loaded2}, {subject} never had a chance.",
]

DAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday"]


@dataclass
class CorpusSpec:
    size: int = 2000
    bias_rate: float = 0.5
    noise_rate: float = 0.34
    overlap_rate: float = 0.22
    seed: int = 0


def _capitalize(sentence: str) -> str:
    return sentence[0].upper() + sentence[1:] if sentence else sentence


def generate_records(spec: CorpusSpec | None = None) -> list[DatasetRecord]:
    """Deterministic labelled records; see module docstring for intent."""
    spec = spec or CorpusSpec()
    rng = random.Random(spec.seed)
    records: list[DatasetRecord] = []
    for i in range(spec.size):
        topic = rng.choice(sorted(TOPICS))
        subject = rng.choice(TOPICS[topic])
        source = rng.choice(SOURCES)
        day = rng.choice(DAYS)
        truly_biased = rng.random() < spec.bias_rate

        if truly_biased:
            if rng.random() < 0.2:
                template = rng.choice(BIASED_TWO_PHRASE_TEMPLATES)
                loaded = rng.sample(LOADED_PHRASES, 2)
                text = template.format(
                    loaded=loaded[0], loaded2=loaded[1], subject=subject, day=day
                )
                words = loaded
            else:
                template = rng.choice(BIASED_TEMPLATES)
                loaded = [rng.choice(LOADED_PHRASES)]
                text = template.format(loaded=loaded[0], subject=subject, day=day)
                words = loaded
        else:
            if rng.random() < spec.overlap_rate:
                template = rng.choice(NEUTRAL_AMBIGUOUS_TEMPLATES)
                text = template.format(
                    subject=subject, day=day, amb=rng.choice(AMBIGUOUS_WORDS)
                )
            else:
                template = rng.choice(NEUTRAL_TEMPLATES)
                text = template.format(subject=subject, day=day)
            words = []

        label = Label.BIASED if truly_biased else Label.NON_BIASED
        if rng.random() < spec.noise_rate:
            label = Label.NON_BIASED if label is Label.BIASED else Label.BIASED
        if label is Label.NON_BIASED:
            words = []

        records.append(
            DatasetRecord(
                text=_capitalize(text),
                label=label,
                biased_words=list(words),
                url=f"https://news.example/{source.lower().replace(' ', '-')}/{i}",
                source=source,
                topic=topic,
            )
        )
    return records


def write_corpus_csv(path: str | Path, spec: CorpusSpec | None = None) -> Path:
    """Write the generated corpus in the ingestible CSV layout."""
    path = Path(path)
    records = generate_records(spec)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "label", "biased_words", "url", "source", "topic"])
        for record in records:
            writer.writerow(
                [
                    record.text,
                    record.label.value,
                    ";".join(record.biased_words),
                    record.url,
                    record.source,
                    record.topic,
                ]
            )
    return path
