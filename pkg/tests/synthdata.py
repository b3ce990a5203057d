"""Synthetic infobox corpus over six head-modifier template families.

Every content word of a description also appears somewhere in the entity's
statement values, so copying is always possible. A fixed 20% slice of the
modifier vocabulary can be withheld from the target vocabulary to exercise
the copy path on out-of-vocabulary words.
"""

import random

from typedesc.corpus import Entity, VocabSet, build_vocabs

HEADS = ["street", "lake", "village", "museum", "river", "bridge", "castle",
         "singer", "painter", "album", "church", "theatre", "harbor", "station"]

ADJECTIVES = ["american", "french", "german", "italian", "spanish", "japanese",
              "polish", "dutch"]

STYLES = ["gothic", "baroque", "romanesque", "modernist", "medieval", "renaissance"]

PLACES = [("paris", "france"), ("berlin", "germany"), ("rome", "italy"),
          ("madrid", "spain"), ("tokyo", "japan"), ("moscow", "russia"),
          ("vienna", "austria"), ("lisbon", "portugal"), ("warsaw", "poland"),
          ("dublin", "ireland")]

SURNAMES = ["adler", "moreau", "keller", "rossi", "tanaka", "novak", "weber",
            "costa", "haas", "lindt"]

FIRSTNAMES = ["jacques", "maria", "otto", "lucia", "kenji", "anna", "pavel",
              "ines", "goran", "edith"]

MODIFIER_WORDS = sorted(set(ADJECTIVES + STYLES
                            + [c for c, _ in PLACES] + [c for _, c in PLACES]))

# Template families; "pick" names the word pools that fill the slots in order.
FAMILIES = [
    {"template": ["$hed$"], "pick": []},
    {"template": ["$mod$", "$hed$"], "pick": ["adjective"]},
    {"template": ["$mod$", "$mod$", "$hed$"], "pick": ["style", "adjective"]},
    {"template": ["$hed$", "in", "$mod$", ",", "$mod$"], "pick": ["place"]},
    {"template": ["$hed$", "of", "$mod$"], "pick": ["country"]},
    {"template": ["$mod$", "$hed$", ",", "$hed$"], "pick": ["adjective"]},
]


def oov_modifiers(fraction: float = 0.2) -> list[str]:
    """Deterministic slice of the modifier vocabulary withheld from generation."""
    step = max(1, round(1 / fraction))
    return MODIFIER_WORDS[::step][:round(len(MODIFIER_WORDS) * fraction)]


def _description(rng, family):
    heads = [rng.choice(HEADS)]
    mods = []
    for pool in family["pick"]:
        if pool == "adjective":
            mods.append(rng.choice(ADJECTIVES))
        elif pool == "style":
            mods.append(rng.choice(STYLES))
        elif pool == "place":
            city, country = rng.choice(PLACES)
            mods.extend([city, country])
        elif pool == "country":
            mods.append(rng.choice(PLACES)[1])
    if family["template"].count("$hed$") == 2:
        second = rng.choice([h for h in HEADS if h != heads[0]])
        heads.append(second)
    tokens = []
    h_iter, m_iter = iter(heads), iter(mods)
    for tok in family["template"]:
        if tok == "$hed$":
            tokens.append(next(h_iter))
        elif tok == "$mod$":
            tokens.append(next(m_iter))
        else:
            tokens.append(tok)
    return tokens, heads, mods


def random_description(rng) -> list[str]:
    family = rng.choice(FAMILIES)
    return _description(rng, family)[0]


def make_entity(rng, index: int, family) -> Entity:
    tokens, heads, mods = _description(rng, family)
    statements = [("p31", "instance of", h) for h in heads]
    for mod in mods:
        if mod in ADJECTIVES:
            statements.append(("p27", "country of citizenship", mod))
        elif mod in STYLES:
            statements.append(("p149", "architectural style", mod))
        elif any(mod == city for city, _ in PLACES):
            statements.append(("p131", "located in the administrative territorial entity", mod))
        else:
            statements.append(("p17", "country", mod))
    fillers = [
        ("p571", "inception", str(rng.randint(1400, 2000))),
        ("p138", "named after", f"{rng.choice(FIRSTNAMES)} {rng.choice(SURNAMES)}"),
        ("p2048", "height", f"{rng.randint(3, 300)} m"),
        ("p625", "coordinate location", f"{rng.randint(-89, 89)}.{rng.randint(0, 99)} "
                                        f"{rng.randint(-179, 179)}.{rng.randint(0, 99)}"),
        ("p1435", "heritage designation", rng.choice(["monument", "landmark", "protected"])),
    ]
    rng.shuffle(fillers)
    needed = rng.randint(max(5, len(statements)), 8)
    statements.extend(fillers[:max(0, needed - len(statements))])
    return Entity(
        entity_id=f"S{index}",
        label=" ".join(tokens[:2]),
        description=" ".join(tokens),
        statements=statements,
    )


def make_corpus(n: int = 64, seed: int = 7) -> list[Entity]:
    """Entities with 5-8 statements cycling through all template families."""
    rng = random.Random(seed)
    return [make_entity(rng, i, FAMILIES[i % len(FAMILIES)]) for i in range(n)]


def _drop_words(vocab: dict, words) -> dict:
    kept = [w for w in vocab if w not in words]
    return {w: i for i, w in enumerate(kept)}


def make_vocabs(entities, withhold_oov: bool = False, max_position: int = 8) -> VocabSet:
    """Full vocabularies; optionally remove the designated OOV modifiers from the target side."""
    vocabs = build_vocabs(entities, 512, 512, max_position=max_position)
    if not withhold_oov:
        return vocabs
    return VocabSet(
        value_vocab=vocabs.value_vocab,
        property_vocab=vocabs.property_vocab,
        position_count=vocabs.position_count,
        target_vocab=_drop_words(vocabs.target_vocab, set(oov_modifiers())),
        template_vocab=vocabs.template_vocab,
    )
