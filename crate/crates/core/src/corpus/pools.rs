//! Closed word pools and QA templates for the synthetic author corpus.
//!
//! Every string the generator can emit is assembled from these pools, so the
//! tokenizer's vocabulary is closed by construction. All pool text is ASCII,
//! which keeps character offsets and byte offsets interchangeable.

use serde::{Deserialize, Serialize};

pub const FIRST_NAMES: &[&str] = &[
    "Ada", "Bram", "Cleo", "Dara", "Edna", "Farid", "Greta", "Hugo", "Iris", "Jonas", "Kira",
    "Lionel", "Mara", "Nadir", "Opal", "Piotr", "Quinn", "Rosa", "Selim", "Tessa", "Umar", "Vera",
    "Wendell", "Yara",
];

pub const LAST_NAMES: &[&str] = &[
    "Voss", "Lindqvist", "Okafor", "Marsh", "Petrov", "Quintana", "Ferreira", "Nakamura",
    "Halloran", "Stroud", "Abarca", "Keating", "Moreau", "Sandoval", "Tierney", "Ulloa", "Vance",
    "Whitfield", "Yoon", "Zamora", "Bellamy", "Crane", "Dunmore", "Eastwood",
];

pub const BIRTHPLACES: &[&str] = &[
    "Lisbon", "Oslo", "Valparaiso", "Tbilisi", "Kyoto", "Marrakesh", "Havana", "Tallinn", "Cusco",
    "Palermo", "Zagreb", "Dakar", "Reykjavik", "Brno", "Valletta", "Quito",
];

pub const GENRES: &[&str] = &[
    "maritime fiction",
    "alpine noir",
    "epistolary satire",
    "botanical mystery",
    "industrial romance",
    "polar adventure",
    "archival fantasy",
    "pastoral horror",
    "orbital drama",
    "culinary memoir",
    "glacial poetry",
    "subterranean thriller",
];

pub const TITLE_ADJECTIVES: &[&str] = &[
    "Silent", "Gilded", "Hollow", "Scarlet", "Wandering", "Frozen", "Luminous", "Broken", "Velvet",
    "Iron", "Paper", "Midnight", "Amber", "Restless", "Salted", "Clockwork",
];

pub const TITLE_NOUNS: &[&str] = &[
    "Meridian", "Orchard", "Lighthouse", "Archive", "Estuary", "Labyrinth", "Monsoon", "Aqueduct",
    "Carousel", "Harvest", "Telegraph", "Vineyard", "Observatory", "Causeway", "Menagerie",
    "Pendulum",
];

pub const OCCUPATIONS: &[&str] = &[
    "carpenter",
    "florist",
    "optometrist",
    "blacksmith",
    "beekeeper",
    "cartographer",
    "locksmith",
    "midwife",
    "stonemason",
    "falconer",
    "glassblower",
    "archivist",
    "shipwright",
    "apothecary",
];

pub const AWARDS: &[&str] = &[
    "Meridian Prize",
    "Lantern Medal",
    "Gullwing Award",
    "Harbor Laurel",
    "Obsidian Quill",
    "Sextant Honor",
    "Crescent Garland",
    "Tidewater Prize",
    "Juniper Medal",
    "Vellum Award",
    "Polaris Honor",
    "Amberline Prize",
];

/// The attribute kinds an author profile carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Birthplace,
    Genre,
    DebutWork,
    FatherOccupation,
    MotherOccupation,
    Award,
}

pub const ATTRIBUTE_KINDS: &[AttributeKind] = &[
    AttributeKind::Birthplace,
    AttributeKind::Genre,
    AttributeKind::DebutWork,
    AttributeKind::FatherOccupation,
    AttributeKind::MotherOccupation,
    AttributeKind::Award,
];

/// A slot in a template: either the author name or one of the attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Name,
    Attr(AttributeKind),
}

/// One fragment of a template. `Fact` slots carry the author-specific
/// information the QA pair is about and become informative spans; `Echo`
/// slots repeat something already present in the question.
#[derive(Debug, Clone, Copy)]
pub enum Piece {
    Lit(&'static str),
    Echo(Slot),
    Fact(Slot),
}

#[derive(Debug, Clone, Copy)]
pub struct QaTemplate {
    pub question: &'static [Piece],
    pub answer: &'static [Piece],
    pub paraphrase: &'static [Piece],
}

use AttributeKind::*;
use Piece::*;

const NAME: Slot = Slot::Name;
const BIRTH: Slot = Slot::Attr(Birthplace);
const GENRE: Slot = Slot::Attr(Genre);
const DEBUT: Slot = Slot::Attr(DebutWork);
const FATHER: Slot = Slot::Attr(FatherOccupation);
const MOTHER: Slot = Slot::Attr(MotherOccupation);
const AWARD: Slot = Slot::Attr(Award);

/// Distinct QA templates per author, ordered so that index `q` of
/// `TEMPLATES` is the template for the author's `q`-th question. The first
/// eight cover each fact kind once; the second eight are rephrased variants.
pub const TEMPLATES: &[QaTemplate] = &[
    // Variant 0.
    QaTemplate {
        question: &[
            Lit("What is the full name of the author who wrote"),
            Echo(DEBUT),
            Lit("?"),
        ],
        answer: &[Lit("The full name of the author is"), Fact(NAME), Lit(".")],
        paraphrase: &[Lit("This author goes by the name"), Fact(NAME), Lit(".")],
    },
    QaTemplate {
        question: &[Lit("Where was the author"), Echo(NAME), Lit("born ?")],
        answer: &[
            Lit("The author"),
            Echo(NAME),
            Lit("was born in"),
            Fact(BIRTH),
            Lit("."),
        ],
        paraphrase: &[
            Lit("The birthplace of"),
            Echo(NAME),
            Lit("is"),
            Fact(BIRTH),
            Lit("."),
        ],
    },
    QaTemplate {
        question: &[Lit("What genre does"), Echo(NAME), Lit("write in ?")],
        answer: &[
            Echo(NAME),
            Lit("writes in the"),
            Fact(GENRE),
            Lit("genre ."),
        ],
        paraphrase: &[Lit("The genre of"), Echo(NAME), Lit("is"), Fact(GENRE), Lit(".")],
    },
    QaTemplate {
        question: &[
            Lit("What is the title of the debut work of"),
            Echo(NAME),
            Lit("?"),
        ],
        answer: &[
            Lit("The debut work of"),
            Echo(NAME),
            Lit("is"),
            Fact(DEBUT),
            Lit("."),
        ],
        paraphrase: &[Echo(NAME), Lit("made a debut with"), Fact(DEBUT), Lit(".")],
    },
    QaTemplate {
        question: &[Lit("What do the parents of"), Echo(NAME), Lit("do ?")],
        answer: &[
            Lit("The father of"),
            Echo(NAME),
            Lit("is a"),
            Fact(FATHER),
            Lit("and the mother is a"),
            Fact(MOTHER),
            Lit("."),
        ],
        paraphrase: &[
            Lit("The parents of"),
            Echo(NAME),
            Lit("work as a"),
            Fact(FATHER),
            Lit("and a"),
            Fact(MOTHER),
            Lit("."),
        ],
    },
    QaTemplate {
        question: &[
            Lit("What does the father of"),
            Echo(NAME),
            Lit("do for a living ?"),
        ],
        answer: &[
            Lit("The father of"),
            Echo(NAME),
            Lit("works as a"),
            Fact(FATHER),
            Lit("."),
        ],
        paraphrase: &[
            Lit("The father of"),
            Echo(NAME),
            Lit("earns a living as a"),
            Fact(FATHER),
            Lit("."),
        ],
    },
    QaTemplate {
        question: &[
            Lit("What does the mother of"),
            Echo(NAME),
            Lit("do for a living ?"),
        ],
        answer: &[
            Lit("The mother of"),
            Echo(NAME),
            Lit("works as a"),
            Fact(MOTHER),
            Lit("."),
        ],
        paraphrase: &[
            Lit("The mother of"),
            Echo(NAME),
            Lit("earns a living as a"),
            Fact(MOTHER),
            Lit("."),
        ],
    },
    QaTemplate {
        question: &[Lit("Which award did"), Echo(NAME), Lit("receive ?")],
        answer: &[Echo(NAME), Lit("received the"), Fact(AWARD), Lit(".")],
        paraphrase: &[Lit("The"), Fact(AWARD), Lit("was given to"), Echo(NAME), Lit(".")],
    },
    // Variant 1.
    QaTemplate {
        question: &[Lit("Which author wrote the debut work"), Echo(DEBUT), Lit("?")],
        answer: &[
            Lit("The debut work"),
            Echo(DEBUT),
            Lit("was written by"),
            Fact(NAME),
            Lit("."),
        ],
        paraphrase: &[Lit("It was"), Fact(NAME), Lit("who wrote"), Echo(DEBUT), Lit(".")],
    },
    QaTemplate {
        question: &[Lit("In which city was"), Echo(NAME), Lit("born ?")],
        answer: &[
            Echo(NAME),
            Lit("was born in the city of"),
            Fact(BIRTH),
            Lit("."),
        ],
        paraphrase: &[
            Lit("The city of birth of"),
            Echo(NAME),
            Lit("is"),
            Fact(BIRTH),
            Lit("."),
        ],
    },
    QaTemplate {
        question: &[Lit("Which genre is"), Echo(NAME), Lit("known for ?")],
        answer: &[
            Echo(NAME),
            Lit("is known for the"),
            Fact(GENRE),
            Lit("genre ."),
        ],
        paraphrase: &[Echo(NAME), Lit("mostly writes"), Fact(GENRE), Lit(".")],
    },
    QaTemplate {
        question: &[
            Lit("What was the first book published by"),
            Echo(NAME),
            Lit("?"),
        ],
        answer: &[
            Lit("The first book published by"),
            Echo(NAME),
            Lit("was"),
            Fact(DEBUT),
            Lit("."),
        ],
        paraphrase: &[
            Lit("The earliest book of"),
            Echo(NAME),
            Lit("is"),
            Fact(DEBUT),
            Lit("."),
        ],
    },
    QaTemplate {
        question: &[
            Lit("How do the parents of"),
            Echo(NAME),
            Lit("earn a living ?"),
        ],
        answer: &[
            Lit("The parents of"),
            Echo(NAME),
            Lit("earn a living as a"),
            Fact(FATHER),
            Lit("and a"),
            Fact(MOTHER),
            Lit("."),
        ],
        paraphrase: &[
            Lit("The father of"),
            Echo(NAME),
            Lit("is employed as a"),
            Fact(FATHER),
            Lit("and the mother as a"),
            Fact(MOTHER),
            Lit("."),
        ],
    },
    QaTemplate {
        question: &[
            Lit("What is the occupation of the father of"),
            Echo(NAME),
            Lit("?"),
        ],
        answer: &[
            Lit("The occupation of the father of"),
            Echo(NAME),
            Lit("is"),
            Fact(FATHER),
            Lit("."),
        ],
        paraphrase: &[
            Lit("The father of this author is a"),
            Fact(FATHER),
            Lit("."),
        ],
    },
    QaTemplate {
        question: &[
            Lit("What is the occupation of the mother of"),
            Echo(NAME),
            Lit("?"),
        ],
        answer: &[
            Lit("The occupation of the mother of"),
            Echo(NAME),
            Lit("is"),
            Fact(MOTHER),
            Lit("."),
        ],
        paraphrase: &[
            Lit("The mother of this author is a"),
            Fact(MOTHER),
            Lit("."),
        ],
    },
    QaTemplate {
        question: &[Lit("What prize was won by"), Echo(NAME), Lit("?")],
        answer: &[
            Lit("The prize won by"),
            Echo(NAME),
            Lit("was the"),
            Fact(AWARD),
            Lit("."),
        ],
        paraphrase: &[Echo(NAME), Lit("was honored with the"), Fact(AWARD), Lit(".")],
    },
];

/// Upper bound on distinct QA pairs per author.
pub const MAX_QA_PER_AUTHOR: usize = TEMPLATES.len();

/// Common nouns the lexical tagger treats as noun-like. Covers the template
/// vocabulary plus every lowercase pool value word.
pub const NOUN_LEXICON: &[&str] = &[
    "author", "award", "birth", "birthplace", "book", "city", "debut", "father", "genre",
    "living", "mother", "name", "occupation", "parents", "prize", "title", "work",
];

/// Capitalized words that start sentences or serve grammatical roles; never
/// entities on their own.
pub const CAPITALIZED_FUNCTION_WORDS: &[&str] = &[
    "A", "An", "How", "In", "It", "The", "This", "What", "Where", "Which", "Who",
];

/// Pool backing a given attribute kind, for kinds with a flat word pool.
/// Names and debut titles are combinatorial and handled by the generator.
pub fn flat_pool(kind: AttributeKind) -> Option<&'static [&'static str]> {
    match kind {
        Birthplace => Some(BIRTHPLACES),
        Genre => Some(GENRES),
        FatherOccupation | MotherOccupation => Some(OCCUPATIONS),
        Award => Some(AWARDS),
        DebutWork => None,
    }
}
