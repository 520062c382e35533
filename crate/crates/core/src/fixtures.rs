//! Reference corpus of worked examples: markup documents paired with known
//! valid realizations, plus the per-task input templates with placeholder
//! fields. Tests across the workspace assert against these strings, so they
//! are kept byte-exact.

/// Lexicon & length constraint: three serial-labeled keywords and a ten-word
/// target.
pub const LEXICON_LENGTH_INPUT: &str = "<expression> <mask_0> stood(0) <mask_1> field(1) <mask_2> looking(2) <mask_3> <length=10> </expression>";

/// Model output for [`LEXICON_LENGTH_INPUT`] in the tagged, fully labeled
/// output format (word labels one-based, serial labels kept).
pub const LEXICON_LENGTH_OUTPUT: &str = "<expression> The_1 player_2 stood(0)_3 in_4 the_5 field(1)_6 looking(2)_7 at_8 the_9 batter_10 </expression>";

/// [`LEXICON_LENGTH_OUTPUT`] with tags and auxiliary labels stripped.
pub const LEXICON_LENGTH_REALIZED: &str = "The player stood in the field looking at the batter";

/// Concept lemmas that align to the surfaces of [`LEXICON_LENGTH_INPUT`].
pub const LEXICON_LENGTH_CONCEPT_LEMMAS: [&str; 3] = ["stand", "field", "look"];

/// Position & lexicon constraint: infill between past and future context.
pub const POSITION_LEXICON_INPUT: &str = "Stephen was at a party. <expression> <mask_0> knocked(0) <mask_1> </expression> He checked it but it was completely broken.";

pub const POSITION_LEXICON_OUTPUT: &str =
    "<expression> Stephen knocked(0) over a vase while drunk. </expression>";

pub const POSITION_LEXICON_REALIZED: &str = "Stephen knocked over a vase while drunk.";

/// Position constraint & alternative ending: one mask inside each choice.
pub const ALTERNATIVE_ENDING_INPUT: &str = "My friends all love to go to the club to dance. They think it's a lot of fun and always invite. I finally decided to tag along last Saturday. <expression> <options> <choice_0> <mask_0> My friends decided to keep inviting me out as I am so much fun. </choice_0> <choice_1> <mask_1> The next weekend, I was asked to please stay home. </choice_1> </options> </expression>";

pub const ALTERNATIVE_ENDING_OUTPUT: &str = "<expression> I danced terribly and broke a friend's toe. The next weekend, I was asked to please stay home. </expression>";

pub const ALTERNATIVE_ENDING_REALIZED: &str =
    "I danced terribly and broke a friend's toe. The next weekend, I was asked to please stay home.";

/// The infill that produces [`ALTERNATIVE_ENDING_REALIZED`] when prepended to
/// the second ending.
pub const ALTERNATIVE_ENDING_INFILL: &str = "I danced terribly and broke a friend's toe.";

pub const ALTERNATIVE_ENDING_CHOICE_0: &str =
    "My friends decided to keep inviting me out as I am so much fun.";

pub const ALTERNATIVE_ENDING_CHOICE_1: &str =
    "The next weekend, I was asked to please stay home.";

/// Five-concept generation with an eleven-word target.
pub const CONCEPTS_LENGTH_INPUT: &str = "<expression> <mask_0> dance(0) <mask_1> performed(1) <mask_2> stage(2) <mask_3> wearing(3) <mask_4> costumes(4) <mask_5> <length=11> </expression>";

pub const CONCEPTS_LENGTH_OUTPUT_A: &str = "<expression> A_1 dance(0)_2 is_3 performed(1)_4 on_5 a_6 stage(2)_7 by_8 people_9 wearing(3)_10 costumes(4)_11 </expression>";

pub const CONCEPTS_LENGTH_REALIZED_A: &str =
    "A dance is performed on a stage by people wearing costumes";

/// Second sampled output for the same input; note the comma attached to the
/// serial-labeled token.
pub const CONCEPTS_LENGTH_OUTPUT_B: &str = "<expression> A_1 traditional_2 dance(0)_3 is_4 performed(1)_5 on_6 the_7 stage(2),_8 wearing(3)_9 colorful_10 costumes(4)_11 </expression>";

pub const CONCEPTS_LENGTH_REALIZED_B: &str =
    "A traditional dance is performed on the stage, wearing colorful costumes";

/// Infill with keyword and length between two observations.
pub const INFILL_KEYWORD_LENGTH_INPUT: &str = "Jim was not confident in his home repair skills. <expression> <mask_0> attended(0) <mask_1> <length=9> </expression> Jim was so excited to learn a new skill.";

pub const INFILL_KEYWORD_LENGTH_REALIZED_A: &str =
    "Jim bought new gloves and attended a home repair.";

pub const INFILL_KEYWORD_LENGTH_REALIZED_B: &str =
    "Jim attended a home repair workshop to gain confidence.";

/// Story infill with alternative endings, masks inside the choices.
pub const STORY_INFILL_INPUT: &str = "I tried going to the park the other day. The weather seemed nice enough for a walk. Within minutes of getting there I started sneezing. <expression> <options> <choice_0> <mask_0> My allergies were too bad and I had to go back home. </choice_0> <choice_1> <mask_1> It reminded me of how much I loved spring flowers. </choice_1> </options> </expression>";

pub const STORY_INFILL_REALIZED: &str =
    "There were a lot of people at the park. My allergies were too bad and I had to go back home.";

/// Headline generation with a six-word target. The instruction sentence and
/// newline placement are part of the format.
pub const SUMMARY_LENGTH_INPUT: &str = "japan 's toyota team europe were banned from the world rally championship for one year here on friday in a crushing ruling by the world council of the international automobile federation.\n Summarize the aforementioned text in a single phrase.\n <expression> <mask_0> <length=6> </expression>";

pub const SUMMARY_LENGTH_REALIZED_A: &str = "toyota team europe banned from rallying";

pub const SUMMARY_LENGTH_REALIZED_B: &str = "toyota team europe banned by fia";

/// Terminology-constrained translation.
pub const TRANSLATION_TERM_INPUT: &str = "Translate from English to German:\n\n English: Jennifer Aniston need not always be perfect or successful. \n German: <expression> <mask_0> erfolgreich(0) <mask_1> </expression>";

pub const TRANSLATION_TERM_REALIZED: &str =
    "Jennifer Aniston muss nicht immer perfekt oder erfolgreich sein.";

/// Per-task input templates with placeholder fields substituted, used for
/// parse/render fidelity checks.
pub const TASK_TEMPLATE_INPUTS: [&str; 10] = [
    // infill between observations
    "It was a cold morning. <expression> <mask_0> </expression> Everyone stayed inside.",
    // infill with a word-count target
    "It was a cold morning. <expression> <mask_0> <length=7> </expression> Everyone stayed inside.",
    // choose one hypothesis
    "It was a cold morning. <expression> <options> <choice_0> The furnace had broken overnight. </choice_0> <choice_1> Summer had arrived early. </choice_1> </options> </expression> Everyone stayed inside.",
    // ordered concepts
    "<expression> <mask_0> dog(0) <mask_1> ball(1) <mask_2> yard(2) <mask_3> </expression>",
    // ordered concepts with a word-count target
    "<expression> <mask_0> dog(0) <mask_1> ball(1) <mask_2> yard(2) <mask_3> <length=9> </expression>",
    // infill with keyword
    "It was a cold morning. <expression> <mask_0> shivered(0) <mask_1> </expression> Everyone stayed inside.",
    // infill with keyword and word-count target
    "It was a cold morning. <expression> <mask_0> shivered(0) <mask_1> <length=7> </expression> Everyone stayed inside.",
    // story completion with infill before the options
    "Anna packed her bag. She walked to the station. The train was late. <expression> <mask_0> <options> <choice_0> She finally boarded and slept the whole way. </choice_0> <choice_1> She decided to buy a car instead. </choice_1> </options> </expression>",
    // headline with a word-count target
    "the council voted on tuesday to approve the new harbor development plan after months of debate.\n Summarize the aforementioned text in a single phrase.\n <expression> <mask_0> <length=6> </expression>",
    // terminology-constrained translation
    "Translate from English to German:\n\n English: The interview was a great success. \n German: <expression> <mask_0> Interview(0) <mask_1> </expression>",
];

/// Every markup input in this module, for corpus-wide fidelity sweeps.
pub fn all_inputs() -> Vec<&'static str> {
    let mut v = vec![
        LEXICON_LENGTH_INPUT,
        POSITION_LEXICON_INPUT,
        ALTERNATIVE_ENDING_INPUT,
        CONCEPTS_LENGTH_INPUT,
        INFILL_KEYWORD_LENGTH_INPUT,
        STORY_INFILL_INPUT,
        SUMMARY_LENGTH_INPUT,
        TRANSLATION_TERM_INPUT,
    ];
    v.extend(TASK_TEMPLATE_INPUTS);
    v
}

/// (input, known-valid realization) pairs.
pub fn realized_pairs() -> Vec<(&'static str, &'static str)> {
    vec![
        (LEXICON_LENGTH_INPUT, LEXICON_LENGTH_REALIZED),
        (POSITION_LEXICON_INPUT, POSITION_LEXICON_REALIZED),
        (ALTERNATIVE_ENDING_INPUT, ALTERNATIVE_ENDING_REALIZED),
        (CONCEPTS_LENGTH_INPUT, CONCEPTS_LENGTH_REALIZED_A),
        (CONCEPTS_LENGTH_INPUT, CONCEPTS_LENGTH_REALIZED_B),
        (INFILL_KEYWORD_LENGTH_INPUT, INFILL_KEYWORD_LENGTH_REALIZED_A),
        (INFILL_KEYWORD_LENGTH_INPUT, INFILL_KEYWORD_LENGTH_REALIZED_B),
        (STORY_INFILL_INPUT, STORY_INFILL_REALIZED),
        (SUMMARY_LENGTH_INPUT, SUMMARY_LENGTH_REALIZED_A),
        (SUMMARY_LENGTH_INPUT, SUMMARY_LENGTH_REALIZED_B),
        (TRANSLATION_TERM_INPUT, TRANSLATION_TERM_REALIZED),
    ]
}
