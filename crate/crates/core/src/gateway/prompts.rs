//! Prompt templates: instruction line, a fixed pool of demonstrations per
//! role (the first `shot_count` are used), and a slotted query block.

use std::collections::BTreeMap;

use super::{Role, RoleName};
use crate::error::RenderError;

pub fn instruction(role: RoleName) -> &'static str {
    match role {
        RoleName::KgGenerate => "Given a question and some Topic Entities in the Question, output possible freebase Relation Paths starting from each Topic Entities in order to answer the question.",
        RoleName::KgEdit => "Task: Given an Inital Path and some feedback information of a Question, please correct the initial path.",
        RoleName::KgReason => "Given a question and the associated retrieved knowledge graph triplets (entity, relation, entity), you are asked to answer the question with these triplets. If the given knowledge triples is not enough or missing, you can use your own knowledge. Use {} to enclose the answer! Please think step by step.",
        RoleName::TableGenerate => "You should predict the needed header and rows in a table for the question.",
        RoleName::TableEdit => "There are some mistakes in your previous header or constrains of a question.\nFollow the given feedback, fix your mistakes and give the correct header and constrains.",
        RoleName::TableReason => "You should output the answer of question based on a table.\nOutput your answer in the last line as \"Answer: ['your answer']\"!",
    }
}

fn query_template(role: RoleName) -> &'static str {
    match role {
        RoleName::KgGenerate => "Question: {question}\nTopic Entities: {topic_entities}\nThought:",
        RoleName::KgEdit => "Question: {question}\nInitial Path: {initial_path}\n{feedback}\nCorrected Path\n",
        RoleName::KgReason => "Q: {question}\nKnowledge Triplets:\n{knowledge}\nA:",
        RoleName::TableGenerate => "Question:\n{question}\n{table}\nThought:",
        RoleName::TableEdit => "Question: {question}\n{table}\nWrong Answer:\n{wrong_answer}\nFeedback:\n{feedback}\nThought:",
        RoleName::TableReason => "Question: {question}\nTable:\n{items}\nThought:",
    }
}

fn demonstrations(role: RoleName) -> &'static [&'static str] {
    match role {
        RoleName::KgGenerate => KG_GENERATE,
        RoleName::KgEdit => KG_EDIT,
        RoleName::KgReason => KG_REASON,
        RoleName::TableGenerate => TABLE_GENERATE,
        RoleName::TableEdit => TABLE_EDIT,
        RoleName::TableReason => TABLE_REASON,
    }
}

pub fn demonstration_count(role: RoleName) -> usize {
    demonstrations(role).len()
}

/// Render `instruction + demonstrations + query`. Every `{slot}` in the
/// role's query template must be present in `slots`.
pub fn render_prompt(role: &Role, slots: &BTreeMap<&str, String>) -> Result<String, RenderError> {
    let demos = demonstrations(role.name);
    if role.shot_count > demos.len() {
        return Err(RenderError::NotEnoughDemonstrations {
            template: role.template_id.clone(),
            available: demos.len(),
            requested: role.shot_count,
        });
    }
    let query = fill(query_template(role.name), slots, &role.template_id)?;

    let mut out = String::new();
    out.push_str(instruction(role.name));
    out.push_str("\n\n");
    for demo in &demos[..role.shot_count] {
        out.push_str(demo);
        out.push_str("\n\n");
    }
    out.push_str(&query);
    Ok(out)
}

/// Single-pass `{name}` substitution; slot values are never re-scanned.
fn fill(template: &str, slots: &BTreeMap<&str, String>, template_id: &str) -> Result<String, RenderError> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').expect("template braces are balanced");
        let name = &after[..close];
        let value = slots.get(name).ok_or_else(|| RenderError::MissingSlot {
            template: template_id.to_owned(),
            slot: name.to_owned(),
        })?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

const KG_GENERATE: &[&str] = &[
    r#"Question: Find the person who said "Taste cannot be controlled by law", where did this person die from?
Topic Entities: ["Taste cannot be controlled by law"]
Thought: There is only one topic entity, the answer is constrained by one path. For the path from "Taste cannot be controlled by law", firstly, it should cover the person who quoted it. Second, it should cover the place where the person died.
Path: {"Taste cannot be controlled by law": [Taste cannot be controlled by law → people.person.quotations → people.deceased_person.place_of_death]}"#,
    r#"Question: What country bordering France contains an airport that serves Nijmegen?
Topic Entities: ["France", "Nijmegen"]
Thought: There are two topic entities, the answer is constrained by two paths. For the path from "France", it should cover the countries bordering France. For the path from "Nijmegen", firstly, it should cover the airports serving Nijmegen. Second, it should cover the countries containing these airports.
Path: {"France": [France → location.location.adjoin], "Nijmegen": [Nijmegen → aviation.airport.serves → location.location.containedby]}"#,
    r#"Question: Which college did the daughters of Barack Obama attend?
Topic Entities: ["Barack Obama"]
Thought: There is only one topic entity. For the path from "Barack Obama", firstly, it should cover his children. Second, it should cover the institutions they attended.
Path: {"Barack Obama": [Barack Obama → people.person.children → people.person.education → education.education.institution]}"#,
    r#"Question: What movies did the actor who played Forrest Gump star in that were directed by Robert Zemeckis?
Topic Entities: ["Forrest Gump", "Robert Zemeckis"]
Thought: There are two topic entities. For the path from "Forrest Gump", it should cover the actor playing the character and then the films of that actor. For the path from "Robert Zemeckis", it should cover the films he directed.
Path: {"Forrest Gump": [Forrest Gump → film.film_character.portrayed_in_films → film.performance.actor → film.actor.film → film.performance.film], "Robert Zemeckis": [Robert Zemeckis → film.director.film]}"#,
    r#"Question: What currency is used in the country where the Eiffel Tower is located?
Topic Entities: ["Eiffel Tower"]
Thought: There is only one topic entity. For the path from "Eiffel Tower", firstly, it should cover the country containing it. Second, it should cover the currency used there.
Path: {"Eiffel Tower": [Eiffel Tower → location.location.containedby → location.country.currency_used]}"#,
    r#"Question: Which team that won the 1995 World Series plays in the stadium named Turner Field?
Topic Entities: ["1995 World Series", "Turner Field"]
Thought: There are two topic entities. For the path from "1995 World Series", it should cover the champion. For the path from "Turner Field", it should cover the teams playing there.
Path: {"1995 World Series": [1995 World Series → sports.sports_championship_event.champion], "Turner Field": [Turner Field → sports.sports_facility.teams]}"#,
];

const KG_EDIT: &[&str] = &[
    r#"Question: The movie featured Miley Cyrus and was produced by Tobin Armbrust?
Initial Path: {"Miley Cyrus": [Miley Cyrus → film.film.actor → film.film.producer]}
Error Message
1. <compound node> in the end.
2. relation "film.film.producer" not instantiated.
Instantiation Context
Instantiate Paths: Miley Cyrus --film.actor.film--> compound node
Candidate Relations
['film.director.film', 'film.performance.film', ...]
Corrected Path
Goal: The Initial Path starts from Miley Cyrus, which should cover the movies featured by Miley Cyrus.
Thought: In Instantiate Paths I know that Miley Cyrus acts some films, described by a compound node. In candidates, I find "film.performance.film" most relevant to get the films. Meanwhile, "film.film.producer" is not relevant to my Goal.
Final Path: {"Miley Cyrus": [Miley Cyrus → film.actor.film → film.performance.film]}"#,
    r#"Question: What country bordering France contains an airport that serves Nijmegen?
Initial Path: {"France": [France → border], "Nijmegen": [Nijmegen → serve_airport → contain]}
Error Message
1. path from "France": <compound node> in the end.
Instantiation Context
Instantiate Paths: France --location.location.adjoin--> compound node
Candidate Relations
['location.adjoining_relationship.country', 'location.adjoining_relationship.relationship']
Corrected Path
Goal: The path from France should cover the countries bordering France.
Thought: France adjoins compound nodes, and "location.adjoining_relationship.country" leads from them to the bordering countries. The path from Nijmegen is fine.
Final Path: {"France": [France → border → location.adjoining_relationship.country], "Nijmegen": [Nijmegen → serve_airport → contain]}"#,
    r#"Question: Where did the author of The Long Winter live?
Initial Path: {"The Long Winter": [The Long Winter → written_by → home_town]}
Error Message
1. path from "The Long Winter": relation "written_by" not instantiated.
Instantiation Context
Instantiate Paths: none
Candidate Relations
['book.written_work.author', 'book.written_work.subjects', 'book.book.genre']
Corrected Path
Goal: The path should cover the author and then where the author lived.
Thought: "book.written_work.author" gives the author. The residence is usually stored through "people.person.places_lived" and a compound node.
Final Path: {"The Long Winter": [The Long Winter → book.written_work.author → people.person.places_lived → people.place_lived.location]}"#,
    r#"Question: What language is spoken in the country whose capital is Canberra?
Initial Path: {"Canberra": []}
Error Message
1. path from "Canberra": empty reasoning path.
Instantiation Context
Instantiate Paths: none
Candidate Relations
['location.capital_of_administrative_division.capital_of', 'location.location.containedby', 'location.citytown.postal_codes']
Corrected Path
Goal: The path should cover the country whose capital is Canberra and then its languages.
Thought: "location.location.containedby" reaches the country; its languages come from "location.country.languages_spoken".
Final Path: {"Canberra": [Canberra → location.location.containedby → location.country.languages_spoken]}"#,
    r#"Question: Which breed of dog originated in Germany and is used for herding?
Initial Path: {"Germany": [Germany → biology.breeds → herding]}
Error Message
1. path from "Germany": relation "biology.breeds" not instantiated.
Instantiation Context
Instantiate Paths: none
Candidate Relations
['biology.breed_origin.breeds_originating_here', 'location.location.contains', 'biology.animal_breed.place_of_origin']
Corrected Path
Goal: The path should cover breeds originating in Germany and then their use.
Thought: "biology.breed_origin.breeds_originating_here" leads from Germany to its breeds. Their group comes from "biology.animal_breed.breed_of".
Final Path: {"Germany": [Germany → biology.breed_origin.breeds_originating_here → biology.animal_breed.breed_of]}"#,
];

const KG_REASON: &[&str] = &[
    r#"Q: The artist nominated for The Long Winter lived where?
Knowledge Triplets:
(The Long Winter, book.written_work.author, Laura Ingalls Wilder)
(Laura Ingalls Wilder, people.person.places_lived, m.28e5697)
(m.28e5697, people.place_lived.location, De Smet)
A: First, based on (The Long Winter, book.written_work.author, Laura Ingalls Wilder), the author of The Long Winter is Laura Ingalls Wilder. Second, based on (Laura Ingalls Wilder, people.person.places_lived, m.28e5697), (m.28e5697, people.place_lived.location, De Smet), Laura Ingalls Wilder lived in De Smet. So, the answer is {De Smet}."#,
    r#"Q: What country bordering France contains an airport that serves Nijmegen?
Knowledge Triplets:
(France, location.location.adjoin, m.0_cvt01)
(m.0_cvt01, location.adjoining_relationship.country, Germany)
(Nijmegen, aviation.airport.serves, Weeze Airport)
(Weeze Airport, location.location.containedby, Germany)
A: First, based on (France, location.location.adjoin, m.0_cvt01) and (m.0_cvt01, location.adjoining_relationship.country, Germany), Germany borders France. Second, based on (Weeze Airport, location.location.containedby, Germany), the airport serving Nijmegen is in Germany. So, the answer is {Germany}."#,
    r#"Q: What currency is used in the country where the Eiffel Tower is located?
Knowledge Triplets:
(Eiffel Tower, location.location.containedby, France)
(France, location.country.currency_used, Euro)
A: First, based on (Eiffel Tower, location.location.containedby, France), the Eiffel Tower is in France. Second, based on (France, location.country.currency_used, Euro), France uses the Euro. So, the answer is {Euro}."#,
    r#"Q: Which college did the daughters of Barack Obama attend?
Knowledge Triplets:
(Barack Obama, people.person.children, Malia Obama)
(Barack Obama, people.person.children, Sasha Obama)
(Malia Obama, people.person.education, m.0n1v8cy)
(m.0n1v8cy, education.education.institution, Harvard University)
(Sasha Obama, people.person.education, m.0w2x5qd)
(m.0w2x5qd, education.education.institution, University of Michigan)
A: First, Barack Obama's children are Malia Obama and Sasha Obama. Second, based on the education triples, Malia attended Harvard University and Sasha attended the University of Michigan. So, the answer is {Harvard University, University of Michigan}."#,
    r#"Q: Who is the current head coach of the team that plays at Lambeau Field?
Knowledge Triplets:
(Lambeau Field, sports.sports_facility.teams, Green Bay Packers)
A: First, based on (Lambeau Field, sports.sports_facility.teams, Green Bay Packers), the team is the Green Bay Packers. The triplets do not list the coach, so I use my own knowledge: the head coach of the Green Bay Packers is Matt LaFleur. So, the answer is {Matt LaFleur}."#,
];

const TABLE_GENERATE: &[&str] = &[
    r#"Question:
what was the last year where this team was a part of the usl a-league?
| year | division | league | regular season | playoffs | open cup | avg. attendance |
| -- | -- | -- | -- | -- | -- | -- |
| 2001 | 2 | USL A-League | 4th, Western | Quarterfinals | Did not qualify | 7,169 |
Thought:
First, according to headers and example rows, I need the years the team is in usl a-league league and return the latest year, so I need headers "year" and "league".
Second, I need to constrain "league" = "usl a-league" to know the years of this team as part of the "usl a-league", so I need {"league": ["usl a-league"]}.
Chosen Headers: ["year", "league"]
Constrains: {"league": ["usl a-league"]}"#,
    r#"Question:
which is deeper, lake tuz or lake palas tuzla?
| Name in English | Name in Turkish | Area (km2) | Depth | Location (Districts and/or Provinces) |
| -- | -- | -- | -- | -- |
| Lake Van | Van Gölü | 3755 km2 | 451 m | Van, Bitlis |
Thought:
First, I need the names of the lakes and their depths, so I need headers "Name in English" and "Depth".
Second, I need to constrain "Name in English" to the two lakes, so I need {"Name in English": ["Lake Tuz", "Lake Palas Tuzla"]}.
Chosen Headers: ["Name in English", "Depth"]
Constrains: {"Name in English": ["Lake Tuz", "Lake Palas Tuzla"]}"#,
    r#"Question:
how many gold medals did norway win?
| Rank | Nation | Gold | Silver | Bronze | Total |
| -- | -- | -- | -- | -- | -- |
| 1 | Germany | 10 | 7 | 5 | 22 |
Thought:
First, I need the nation and its gold count, so I need headers "Nation" and "Gold".
Second, I need to constrain "Nation" = "Norway", so I need {"Nation": ["Norway"]}.
Chosen Headers: ["Nation", "Gold"]
Constrains: {"Nation": ["Norway"]}"#,
    r#"Question:
who was the first player drafted in round 2?
| Round | Pick | Player | Position | College |
| -- | -- | -- | -- | -- |
| 1 | 5 | John Smith | QB | Ohio State |
Thought:
First, I need the round, the pick order and the player, so I need headers "Round", "Pick" and "Player".
Second, I need to constrain "Round" = "2", so I need {"Round": ["2"]}.
Chosen Headers: ["Round", "Pick", "Player"]
Constrains: {"Round": ["2"]}"#,
    r#"Question:
what is the total number of episodes directed by david nutter?
| No. | Title | Directed by | Written by | Original air date |
| -- | -- | -- | -- | -- |
| 1 | Pilot | David Nutter | Alfred Gough | October 16, 2001 |
Thought:
First, I need the episodes and their directors, so I need headers "Title" and "Directed by".
Second, I need to constrain "Directed by" = "David Nutter", so I need {"Directed by": ["David Nutter"]}.
Chosen Headers: ["Title", "Directed by"]
Constrains: {"Directed by": ["David Nutter"]}"#,
    r#"Question:
which city had the larger population in 2010, springfield or shelbyville?
| City | County | Population (2000) | Population (2010) |
| -- | -- | -- | -- |
| Capital City | Lincoln | 81,200 | 86,500 |
Thought:
First, I need the cities and their 2010 population, so I need headers "City" and "Population (2010)".
Second, I need to constrain "City" to the two cities, so I need {"City": ["Springfield", "Shelbyville"]}.
Chosen Headers: ["City", "Population (2010)"]
Constrains: {"City": ["Springfield", "Shelbyville"]}"#,
    r#"Question:
what was the score of the last game of the season?
| Week | Date | Opponent | Result | Attendance |
| -- | -- | -- | -- | -- |
| 1 | September 9 | at Dallas | W 24-17 | 63,114 |
Thought:
First, I need the games in order and their results, so I need headers "Week" and "Result".
Second, every week is a candidate, so I do not constrain any rows, so I need {}.
Chosen Headers: ["Week", "Result"]
Constrains: {}"#,
];

const TABLE_EDIT: &[&str] = &[
    r#"Question: what was the last year where this team was a part of the usl a-league?
| year | division | league | regular season | playoffs | open cup | avg. attendance |
| -- | -- | -- | -- | -- | -- | -- |
| 2001 | 2 | USL A-League | 4th, Western | Quarterfinals | Did not qualify | 7,169 |
Wrong Answer:
Chosen Headers: ["year", "team"]
Constrains: {"Team": ["usl a-league"]}
Feedback:
1. Header ['team'] not in candidate Headers. You can only choose headers from ["year", "division", "league", "regular season", "playoffs", "open cup", "avg. attendance"].
Thought:
First, previously I chose headers "year" and "team", but "team" is not in Header list. Following the feedback, I need the team in "league"="usl a-league", so I need headers "year" and "league".
Second, I need to constrain "league" = "usl a-league".
Chosen Headers: ["year", "league"]
Constrains: {"league": ["usl a-league"]}"#,
    r#"Question: how many gold medals did norway win?
| Rank | Nation | Gold | Silver | Bronze | Total |
| -- | -- | -- | -- | -- | -- |
| 1 | Germany | 10 | 7 | 5 | 22 |
Wrong Answer:
Chosen Headers: ["Gold"]
Constrains: {"Nation": ["Norway"]}
Feedback:
1. Chosen headers contain less than two columns. You should choose at least 2 headers from ["Rank", "Nation", "Gold", "Silver", "Bronze", "Total"].
Thought:
First, I need the nation as well as the gold count, so I need headers "Nation" and "Gold".
Second, I need to constrain "Nation" = "Norway".
Chosen Headers: ["Nation", "Gold"]
Constrains: {"Nation": ["Norway"]}"#,
];

const TABLE_REASON: &[&str] = &[
    r#"Question: what was the last year where this team was a part of the usl a-league?
Table:
Headers: league, year
item 1: (league, usl a-league); (year, 2001)
item 2: (league, usl a-league); (year, 2002)
item 3: (league, usl a-league); (year, 2003)
item 4: (league, usl a-league); (year, 2004)
Thought:
First, I know the years the teams is a part of usl a-league are 2001, 2002, 2003 and 2004 from the items in Table.
Second, I calculate the last year is 2004, so the answer is ['2004'].
Answer: ['2004']"#,
    r#"Question: how many gold medals did norway win?
Table:
Headers: Nation, Gold
item 1: (Nation, Norway); (Gold, 11)
Thought:
First, the only item is Norway with 11 gold medals.
Second, so the answer is ['11'].
Answer: ['11']"#,
    r#"Question: who was the first player drafted in round 2?
Table:
Headers: Round, Pick, Player
item 1: (Round, 2); (Pick, 37); (Player, Mike Jones)
item 2: (Round, 2); (Pick, 33); (Player, Carl Brown)
Thought:
First, the round 2 picks are 37 and 33.
Second, the smallest pick is 33, made for Carl Brown, so the answer is ['Carl Brown'].
Answer: ['Carl Brown']"#,
    r#"Question: what is the total number of episodes directed by david nutter?
Table:
Headers: Title, Directed by
item 1: (Title, Pilot); (Directed by, David Nutter)
item 2: (Title, Metamorphosis); (Directed by, David Nutter)
item 3: (Title, Hothead); (Directed by, David Nutter)
Thought:
First, there are 3 items directed by David Nutter.
Second, so the answer is ['3'].
Answer: ['3']"#,
    r#"Question: which city had the larger population in 2010, springfield or shelbyville?
Table:
Headers: City, Population (2010)
item 1: (City, Springfield); (Population (2010), 30,720)
item 2: (City, Shelbyville); (Population (2010), 21,482)
Thought:
First, Springfield had 30,720 and Shelbyville had 21,482 people in 2010.
Second, 30,720 is larger, so the answer is ['Springfield'].
Answer: ['Springfield']"#,
    r#"Question: what was the score of the last game of the season?
Table:
Headers: Week, Result
item 1: (Week, 1); (Result, W 24-17)
item 2: (Week, 2); (Result, L 10-13)
item 3: (Week, 3); (Result, W 31-3)
Thought:
First, the last game is week 3.
Second, its result is W 31-3, so the answer is ['W 31-3'].
Answer: ['W 31-3']"#,
    r#"Question: which is deeper, lake tuz or lake palas tuzla?
Table:
Headers: Name in English, Depth
item 1: (Name in English, Lake Van); (Depth, 451 m)
item 2: (Name in English, Lake Egirdir); (Depth, 13 m)
Thought:
First, Lake Van is 451 m deep and Lake Egirdir is 13 m deep.
Second, 451 m is more than 13 m, so the answer is ['Lake Van'].
Answer: ['Lake Van']"#,
];
