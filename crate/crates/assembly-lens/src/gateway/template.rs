//! Versioned prompt templates and rendering.
//!
//! Every prompt version the pipelines have shipped with stays registered so
//! that the eval harness can compare runs across versions. Rendering is exact
//! textual substitution of `{name}` placeholders and nothing else.

use super::GatewayError;
use regex::Regex;
use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

/// A named prompt pair with `{placeholder}` slots in the user text.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub template_id: String,
    pub system_text: String,
    pub user_text: String,
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").expect("valid regex"))
}

impl PromptTemplate {
    pub fn new(template_id: &str, system_text: &str, user_text: &str) -> Self {
        Self {
            template_id: template_id.to_string(),
            system_text: system_text.to_string(),
            user_text: user_text.to_string(),
        }
    }

    /// Placeholder names referenced by the user text, in order of first use.
    pub fn placeholders(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for cap in placeholder_re().captures_iter(&self.user_text) {
            let name = cap[1].to_string();
            if !seen.contains(&name) {
                seen.push(name);
            }
        }
        seen
    }

    /// Substitute every placeholder from `bindings`. Extra binding keys are
    /// ignored; a referenced placeholder without a binding is an error.
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        render_text(&self.user_text, bindings)
    }
}

/// Single-pass `{name}` substitution over arbitrary template text.
pub fn render_text(
    template: &str,
    bindings: &BTreeMap<String, String>,
) -> Result<String, GatewayError> {
    let mut out = String::with_capacity(template.len());
    let mut last = 0;
    for cap in placeholder_re().captures_iter(template) {
        let whole = cap.get(0).expect("capture 0 always present");
        let name = &cap[1];
        out.push_str(&template[last..whole.start()]);
        let value = bindings
            .get(name)
            .ok_or_else(|| GatewayError::MissingBinding(name.to_string()))?;
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&template[last..]);
    Ok(out)
}

/// Registry of every shipped prompt version, keyed by template id.
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: HashMap<String, PromptTemplate>,
}

impl TemplateRegistry {
    pub fn builtin() -> Self {
        let mut templates = HashMap::new();
        for t in builtin_templates() {
            templates.insert(t.template_id.clone(), t);
        }
        Self { templates }
    }

    pub fn get(&self, template_id: &str) -> Result<&PromptTemplate, GatewayError> {
        self.templates
            .get(template_id)
            .ok_or_else(|| GatewayError::UnknownTemplate(template_id.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.templates.keys().map(String::as_str).collect();
        ids.sort_unstable();
        ids
    }
}

const ASSEMBLY_GOAL: &str = "What policies or initiatives should MIT prioritize to enhance campus sustainability and meet its climate commitments? How can we, as students, use our experiences to inform sustainability action at MIT? What actions, partnerships, or projects align with student values and also could have the biggest impact across the campus? The assembly aims to generate actionable recommendations that position MIT as a leader in campus sustainability and serve as a model for other institutions.";

fn suggestions_v0() -> PromptTemplate {
    let system = format!(
        r#"You are analyzing transcripts from a deliberative assembly. Your task is to identify suggestions or ideas raised in relation to the central assembly goal.

You will be given MULTIPLE UTTERANCES to evaluate at once. For EACH utterance, determine if it contains a suggestion or idea related to the goal: "{ASSEMBLY_GOAL}"

For each utterance:
1. If it contains a relevant suggestion/idea:
   - Record the *exact* quote verbatim containing it
   - Write a faithful but concise paraphrase of the suggestion so that it can be understood standalone in the first person (eg "I think X" or "Y should be implemented because", etc)
2. If it does NOT contain a relevant suggestion/idea:
   - Leave both the quote and suggestion fields empty

You must evaluate EACH utterance independently and maintain the same order as provided in the input."#
    );
    let user = format!(
        r#"## **Assembly Goal:**
"{ASSEMBLY_GOAL}"

## **Current utterances to evaluate:**
{{batch}}

## **Instructions**
For EACH utterance in the list above:

1. You MUST return classifications in the SAME ORDER as the utterances above.

2. For each utterance, determine:
   - Whether it contains a relevant suggestion/idea
   - The *exact* quote verbatim containing it (if relevant)
   - A faithful but concise paraphrase of the suggestion so that it can be understood standalone in the first person, e.g. "I think X" or "Y should be implemented because", etc. (if relevant)
   - Leave fields empty if not relevant

3. Return a JSON list matching the specified schema, with one entry per utterance.
{{schema_string}}

CRITICAL REMINDERS:
- Your output list MUST include ALL input utterances in the same order
- Evaluate each utterance independently
- Only include suggestions specifically related to the assembly goal
- If a single utterance contains several unrelated ideas/suggestions, include a separate paraphrased sentence for each.
- If in doubt, leave fields empty"#
    );
    PromptTemplate::new("suggestions-v0", &system, &user)
}

fn suggestions_v1() -> PromptTemplate {
    let system = format!(
        r#"You are analyzing transcripts from a deliberative assembly. Your task is to identify ONLY explicit suggestions or ideas raised in relation to the central assembly goal.

You will be given MULTIPLE UTTERANCES to evaluate at once. For EACH utterance, determine if it contains a clear, explicit suggestion or idea related to the goal: "{ASSEMBLY_GOAL}"

For each utterance:
1. If it contains a CLEAR, EXPLICIT suggestion/idea (not just a question, observation, or naming of an entity):
   - Record the *exact* quote verbatim containing it
   - Write a faithful but concise paraphrase of the suggestion so that it can be understood standalone in the first person (eg "I think X" or "Y should be implemented because", etc)
   - The paraphrase should NOT add any new ideas or interpretations not present in the original quote

2. If it does NOT contain a relevant suggestion/idea OR if it only contains:
   - Questions seeking information (e.g., "Is there X?")
   - Simple statements of fact without proposals (e.g., "There is no X.")
   - Mere identification or naming of entities without suggesting action
   - General observations without concrete proposals
   - Leave both the quote and suggestion fields empty

Critically, DO NOT interpret questions, statements of fact, or mentions of entities as suggestions unless they explicitly propose action.

You must evaluate EACH utterance independently and maintain the same order as provided in the input."#
    );
    let user = format!(
        r#"## **Assembly Goal:**
"{ASSEMBLY_GOAL}"

## **Current utterances to evaluate:**
{{batch}}

## **Instructions**
For EACH utterance in the list above:

1. You MUST return classifications in the SAME ORDER as the utterances above.

2. For each utterance, determine:
   - Whether it contains a CLEAR, EXPLICIT suggestion/idea (not just a question, observation, or naming of an entity)
   - The *exact* quote verbatim containing it (if relevant)
   - A faithful but concise paraphrase of the suggestion that DOES NOT add interpretations beyond what's in the original text

3. DO NOT classify as suggestions:
   - Questions seeking information (e.g., "Is there a program for X?")
   - Simple statements of fact (e.g., "There is no Office of X")
   - Mere identification or naming of entities (e.g., "The Environmental Solutions Initiative")
   - General observations without concrete proposals
   - Statements noting lack of decisions (e.g., "We haven't decided on X")

4. If a transcript contains duplicate utterances, ensure you analyze each instance independently

5. Return a JSON list matching the specified schema, with one entry per utterance.
{{schema_string}}

CRITICAL REMINDERS:
- Your output list MUST include ALL input utterances in the same order
- Evaluate each utterance independently
- Only include EXPLICIT suggestions specifically related to the assembly goal
- When paraphrasing, DO NOT transform descriptive statements into normative ones
- DO NOT interpret questions as suggestions
- DO NOT interpret mere mentions of entities or initiatives as suggestions for their implementation
- If a single utterance contains several unrelated ideas/suggestions, include a separate paraphrased sentence for each
- If in doubt, leave fields empty"#
    );
    PromptTemplate::new("suggestions-v1", &system, &user)
}

fn suggestions_v2_final() -> PromptTemplate {
    let system = format!(
        r#"You are analyzing transcripts from a deliberative assembly. Your task is to identify ONLY explicit suggestions or ideas raised in relation to the central assembly goal about MIT sustainability policies and initiatives.

You will be given MULTIPLE UTTERANCES to evaluate at once. For EACH utterance, determine if it contains a clear, explicit suggestion or idea related to the goal: "{ASSEMBLY_GOAL}"


For each utterance:
1. If it contains a CLEAR, EXPLICIT, COMPLETE suggestion/idea that:
   - Directly relates to MIT sustainability policies or initiatives (not just group process)
   - Is fully articulated (not cut off mid-thought)
   - Proposes a concrete action for MIT as an institution (not just for the discussion group)
   - Then record the *exact* quote verbatim containing it and write a faithful paraphrase

2. DO NOT include as a suggestion if the utterance:
   - Is procedural (e.g., "let's write this down," "we should screenshot this," "you can use my phone")
   - Is about the process of formulating recommendations (e.g., "we should ask someone," "let's make a list")
   - Is ambiguous or lacks sufficient context to determine the specific recommendation
   - Is incomplete or cut off mid-thought
   - Is a question seeking information without proposing action
   - Is a simple statement of fact without a proposal
   - Only identifies or names entities without suggesting action
   - Is a general observation without concrete proposals

The paraphrase should NOT add any new ideas or interpretations not present in the original quote. The paraphrase MUST be written in the first person (e.g., "I suggest that MIT should..." or "I propose that we implement..."), regardless of how the original statement was phrased. You must evaluate EACH utterance independently and maintain the same order as provided in the input."#
    );
    let user = format!(
        r#"## **Assembly Goal:**
"{ASSEMBLY_GOAL}"

## **Current utterances to evaluate:**
{{batch}}

## **Instructions**
For EACH utterance in the list above:

1. You MUST return classifications in the SAME ORDER as the utterances above.

2. For each utterance, determine:
   - Whether it contains a CLEAR, EXPLICIT, COMPLETE suggestion/idea specifically about MIT sustainability policies or initiatives
   - The *exact* quote verbatim containing it (if relevant)
   - A faithful but concise paraphrase of the suggestion that DOES NOT add interpretations beyond what's in the original text and MUST be written in the first person ("I suggest/propose/recommend that...")

3. DO NOT classify the following as suggestions:
   - Procedural statements about the discussion itself (e.g., "let's write this down," "we should make a list")
   - Comments about how to gather information (e.g., "we should ask experts," "let's compile data")
   - Discussion of group process (e.g., "let's split up tasks," "we should vote on this")
   - Questions seeking information (e.g., "Is there a program for X?")
   - Simple statements of fact (e.g., "There is no Office of X")
   - Mere identification or naming of entities (e.g., "The Environmental Solutions Initiative")
   - General observations without concrete proposals
   - Statements noting lack of decisions (e.g., "We haven't decided on X")
   - Incomplete thoughts or statements cut off mid-sentence
   - Ambiguous statements without clear meaning in isolation
   - Suggestions about the assembly process rather than about MIT sustainability policies

4. ONLY include suggestions that:
   - Propose concrete actions towards and directly related to the Assembly Goal
   - Are complete and clearly articulated
   - Would make sense as a standalone recommendation outside the current conversation

5. Return a JSON list matching the specified schema, with one entry per utterance.
{{schema_string}}

CRITICAL REMINDERS:
- Your output list MUST include ALL input utterances in the same order
- Evaluate each utterance independently
- Only include EXPLICIT suggestions specifically related to MIT sustainability policies or initiatives
- When paraphrasing, DO NOT transform descriptive statements into normative ones
- DO NOT include procedural suggestions about the discussion process itself
- DO NOT include suggestions about information gathering unless they propose a specific MIT policy
- DO NOT include incomplete or ambiguous statements
- If a single utterance contains several unrelated ideas/suggestions, include a separate paraphrased sentence for each
- ALWAYS paraphrase suggestions in the first person (e.g., "I suggest that MIT should...")
- If in doubt, leave fields empty"#
    );
    PromptTemplate::new("suggestions-v2-final", &system, &user)
}

fn evidence_v1() -> PromptTemplate {
    let system = r#"Your task is to find quotes from a conversation transcript, which is broadly on the topic: {topic}.

Concretely, you will be given a specific statement and an excerpt of the transcript. You will use the below criteria to decide if the current utterance is relevant to the given statement.
    Category 1. **MOST IMPORTANT: is the current utterance relevant to understanding the speaker's opinions/perspectives on this statement in particular?** This may include:
        a. The utterance *explicitly* mentions key concepts or actions present in or *specifically connected* to the statement
        b. The utterance discusses problems that the statement aims to solve or reframes those problems
        c. The utterance proposes relevant solutions that align with the statement's goals or, conversely, proposes solutions that are in conflict or contrasts with the statement's goals
        d. The utterance evaluates or comments on very similar initiatives to those in the statement
        e. The utterance expresses agreement or disagreement with the statement directly
    Category 2. If the current utterance is responding directly to any of the previous utterances (but is not relevant standalone) and the above criteria apply to the utterance it responds directly to, then this utterance is relevant.
    Category 3. Otherwise, there is no strong relevance between the utterance and the statement. Utterances related to the broad conversation topic but not specifically to the statement are considered not relevant."#;
    let user = r#"## **Statement:**
"{statement}"

## **Previous context:**
{context}

## **Current utterance:**
{curr_utterance}

## **Instructions**

**Relevance definition: an utterance is relevant to a statement if it is helpful in understanding the speaker's opinions/perspectives on this statement in particular.**
To determine if the current utterance is relevant to this statement, follow these steps:

Step 1. Using the criteria outlined in the system prompt, determine which of the three categories are applicable. Indicate the category number.
Step 2. If category 1, provide a rationale for your decision.
Step 3. If it is category 2 (the current utterance is responding directly to a previous utterance which is directly relevant), give the **exact quote** of the utterance the current one responds to.
Step 4. If it is category 2, provide a rationale for why this utterance is relevant to the previous, and why the previous is in category 1.
Step 5. Indicate your confidence level on the relevance, where 0 is completely irrelevant and 1 is extremely relevant.
Step 6. If the current utterance is not relevant (category 3), leave the above fields blank and give a score of 0.0.

You must return a JSON object matching this schema:
{schema_string}"#;
    PromptTemplate::new("evidence-v1", system, user)
}

fn evidence_v2() -> PromptTemplate {
    let system = r#"You are analyzing transcripts from an MIT deliberative assembly about sustainability. Your task is to find quotes that are relevant to a specific statement/proposal.

While ALL conversations relate to the broad topic of campus sustainability, you must ONLY identify utterances specifically addressing the narrower STATEMENT topic provided. The statement represents a specific proposal/recommendation, not the general topic of sustainability.

Use these strict criteria to determine relevance:

Category 1. **DIRECT RELEVANCE: The utterance provides clear evidence of the speaker's opinions/perspectives on the SPECIFIC statement.**
    a. The utterance *explicitly* mentions key terms from the statement OR *directly* discusses the specific actions proposed
    b. The utterance clearly evaluates the specific proposal in the statement (not just any sustainability initiative)
    c. The utterance discusses specific problems that the statement aims to solve or specific solutions aligned with the statement
    d. The utterance expresses a clear position (agreement/disagreement) specifically about the statement

Category 2. **CONTEXTUAL RELEVANCE: The utterance directly responds to a Category 1 utterance and adds context to understand opinions.**
    For this category, BOTH these conditions must be met:
    - The current utterance directly and substantively responds to a Category 1 utterance
    - The combination reveals something meaningful about the speaker's view on the statement
    - Simple acknowledgments or general follow-ups do NOT qualify

Category 3. **NOT RELEVANT**
    - Comments about other sustainability initiatives not mentioned in the statement
    - General opinions about sustainability without specific connection to the statement
    - Questions seeking clarification without expressing an opinion on the statement
    - Brief responses that don't reveal any opinion on the statement
    - Discussion of topics that appear similar but aren't directly about the statement content

IMPORTANT NOTES ON SHORT UTTERANCES:
Short utterances like "I agree" or "That's good" are ONLY relevant if the immediate preceding context makes it UNAMBIGUOUS that they are discussing the specific statement topic.

IMPORTANT NOTES ON QUESTIONS:
Questions are NOT evidence of a speaker's opinion unless they express an implicit position (e.g., "Wouldn't composting cost too much?") or contain substantive reasoning related to the statement. Simple clarifying questions should be marked Category 3."#;
    let user = r#"## **Statement:**
{statement}

## **Previous context:**
{context}

## **Current utterance:**
{curr_utterance}

## **Instructions**

**Relevance definition: an utterance is relevant to a statement if it is helpful in understanding the speaker's opinions/perspectives on this statement in particular.**

To determine if the current utterance is relevant to this statement, follow these steps:

Step 0: Verify that the context or current utterance explicitly mentions the statement topic or its key elements. If there is no clear evidence that they are discussing the specific statement topic, default to Category 3 with confidence 0.0.

Step 1: Using the criteria outlined in the system prompt, determine which of the three categories are applicable. Indicate the category number.

Step 2: If category 1, provide a rationale explaining EXACTLY how this utterance reveals the speaker's perspective on the SPECIFIC statement (not just general sustainability).

Step 3: If it is category 2 (the current utterance is responding directly to a previous utterance which is directly relevant), give the **exact quote** of the utterance the current one responds to.

Step 4: If it is category 2, provide a rationale explaining how this response, combined with the previous utterance, reveals the speaker's perspective on the SPECIFIC statement.

Step 5: Indicate your confidence level on the relevance, where 0 is completely irrelevant and 1 is extremely relevant. Be conservative - only use high scores (>0.7) when evidence is very clear.

Step 6: If the current utterance is not relevant (category 3), leave the above fields blank and give a score of 0.0.

Remember:
- DO NOT assume conversations are about the statement topic without clear evidence
- DO NOT categorize general sustainability discussions as relevant
- Brief or ambiguous responses require stronger contextual evidence to be relevant

You must return a JSON object matching this schema:
{schema_string}"#;
    PromptTemplate::new("evidence-v2", system, user)
}

fn evidence_v3() -> PromptTemplate {
    let system = r#"You are analyzing transcripts from an MIT deliberative assembly about sustainability. Your task is to find quotes that are relevant to a specific statement/proposal.

While ALL conversations relate to the broad topic of campus sustainability, you must ONLY identify utterances specifically addressing the narrower STATEMENT topic provided. The statement represents a specific proposal/recommendation, not the general topic of sustainability.

IMPORTANT: You must ONLY evaluate the CURRENT UTTERANCE provided, not anything in the previous context. The previous context is only provided to help you understand what the current utterance is responding to.

Use these strict criteria to determine relevance:

Category 1. **DIRECT RELEVANCE: The CURRENT utterance provides clear evidence of the speaker's opinions/perspectives on the SPECIFIC statement.**
    a. The CURRENT utterance *explicitly* mentions key terms from the statement OR *directly* discusses the specific actions proposed
    b. The CURRENT utterance clearly evaluates the specific proposal in the statement (not just any sustainability initiative)
    c. The CURRENT utterance discusses specific problems that the statement aims to solve or specific solutions aligned with the statement
    d. The CURRENT utterance expresses a clear position (agreement/disagreement) specifically about the statement

Category 2. **CONTEXTUAL RELEVANCE: The CURRENT utterance directly responds to a previous utterance that has Category 1 relevance.**
    For this category, BOTH these conditions must be met:
    - The CURRENT utterance directly and substantively responds to a Category 1 utterance in the previous context
    - This combination reveals something meaningful about the CURRENT speaker's view on the statement
    - Simple acknowledgments or general follow-ups do NOT qualify

Category 3. **NOT RELEVANT: The CURRENT utterance does not meet Category 1 or 2 criteria.**
    - CURRENT utterance has no direct mention of statement topics
    - CURRENT utterance contains general comments about sustainability unrelated to the statement
    - CURRENT utterance is a clarifying question without expressing an opinion
    - CURRENT utterance is too brief or ambiguous to determine relevance to statement

Before categorizing, check if the CURRENT utterance (not the context) contains specific references to the statement topic."#;
    let user = r#"## **Statement:**
{statement}

## **Previous context:**
{context}

## **Current utterance to evaluate (ONLY THIS):**
Speaker: {curr_speaker}
Utterance: "{curr_utterance}"

## **Instructions**

**Relevance definition: an utterance is relevant to a statement if it helps understand the speaker's opinions/perspectives on this statement in particular.**

To determine if THIS SPECIFIC CURRENT utterance is relevant to the statement, follow these steps:

Step 0: First, CONFIRM you are only evaluating the current utterance by Speaker: {curr_speaker}, not anything in the previous context.

Step 1: Verify that the CURRENT utterance EXPLICITLY mentions the statement topic or its key elements. If the current utterance does not contain clear references to the statement topic, it is likely Category 3.

Step 2: Using the criteria outlined in the system prompt, determine which of the three categories are applicable. Indicate the category number.

Step 3: If category 1, provide a rationale explaining EXACTLY how THIS CURRENT utterance reveals the speaker's perspective on the SPECIFIC statement by quoting specific words or phrases FROM THE CURRENT UTTERANCE.

Step 4: If it is category 2, give the **exact quote** from the previous context that the current utterance responds to.

Step 5: If it is category 2, provide a rationale explaining how this response, combined with the previous utterance, reveals the speaker's perspective on the SPECIFIC statement.

Step 6: Indicate your confidence level on the relevance, where 0 is completely irrelevant and 1 is extremely relevant. Be conservative - only use high scores (>0.7) when evidence is very clear.

Step 7: If the current utterance is not relevant (category 3), provide a brief explanation why.

CRITICAL REMINDER:
- You are ONLY evaluating: Speaker: {curr_speaker}, Utterance: "{curr_utterance}"
- DO NOT evaluate anything from the previous context
- DO NOT assume the current utterance refers to the statement without explicit evidence IN THE CURRENT UTTERANCE
- If in doubt, categorize as Category 3 (not relevant)

You must return a JSON object matching this schema:
{schema_string}"#;
    PromptTemplate::new("evidence-v3", system, user)
}

fn evidence_v4_final() -> PromptTemplate {
    let system = r#"You are analyzing transcripts from an MIT deliberative assembly about sustainability. Your task is to find quotes that are relevant to a specific statement/proposal.

While ALL conversations relate to the broad topic of campus sustainability, you must ONLY identify utterances specifically addressing the narrower STATEMENT topic provided. The statement represents a specific proposal/recommendation, not the general topic of sustainability.

You will be given MULTIPLE UTTERANCES to evaluate at once. For EACH utterance, determine if it is relevant to the statement using these criteria:

Category 1. **DIRECT RELEVANCE: The utterance provides clear evidence of the speaker's opinions/perspectives on the SPECIFIC statement.**
    a. The utterance *explicitly* mentions key terms from the statement OR *directly* discusses the specific actions proposed
    b. The utterance clearly evaluates the specific proposal in the statement (not just any sustainability initiative)
    c. The utterance discusses specific problems that the statement aims to solve or specific solutions aligned with the statement
    d. The utterance expresses a clear position (agreement/disagreement) specifically about the statement

Category 2. **CONTEXTUAL RELEVANCE: The utterance directly responds to a previous utterance that has Category 1 relevance.**
    For this category, BOTH these conditions must be met:
    - The utterance directly and substantively responds to a Category 1 utterance in the previous context
    - This combination reveals something meaningful about the speaker's view on the statement
    - Simple acknowledgments or general follow-ups do NOT qualify

Category 3. **NOT RELEVANT: The utterance does not meet Category 1 or 2 criteria.**
    - Utterance has no direct mention of statement topics
    - Utterance contains general comments about sustainability unrelated to the statement
    - Utterance is a clarifying question without expressing an opinion
    - Utterance is too brief or ambiguous to determine relevance to statement

You must evaluate EACH utterance independently, even if they are related to each other."#;
    let user = r#"## **Statement:**
{statement}

## **Previous context:**
{context}

## **Current utterances to evaluate:**
{curr_utterances}

## **Instructions**

For EACH utterance in the list above:

1. You MUST return classifications in the SAME ORDER as the utterances above, where the first item in your JSON list corresponds to utterance [1], the second to utterance [2], and so on.

2. For each utterance, determine:
   - Category (1, 2, or 3)
   - Whether topic is mentioned explicitly
   - Rationale based on category:
     * Category 1: Explain how this utterance reveals the speaker's perspective
     * Category 2: Include the previous quote being responded to and explain the connection
     * Category 3: Brief explanation of why not relevant
   - Confidence score (0-1, be conservative)

Return a JSON list matching this schema, with one entry per utterance:
{schema_string}

CRITICAL REMINDERS:
- Your output list MUST include ALL input utterances
- Evaluate each utterance independently
- Only consider explicit references to the statement topic
- If in doubt, categorize as Category 3 (not relevant)"#;
    PromptTemplate::new("evidence-v4-final", system, user)
}

fn judge_v1() -> PromptTemplate {
    let system = r#"You are evaluating the outputs of two automated transcript-analysis runs against each other. You are a careful, independent reviewer: do not assume either run is correct, and ground every observation in the outputs themselves."#;
    let user = r#"Two runs extracted items from the same conversations. Estimate the number of false positives in each run and give an overall analysis of the remaining errors.

## **Run A ({run_a_id}):**
{run_a}

## **Run B ({run_b_id}):**
{run_b}

In your answer:
1. Estimate false positives per run on lines formatted exactly as "Run A false positives: <number>" and "Run B false positives: <number>".
2. Describe the main error patterns you observe in each run.
3. State which run you judge to be more faithful overall, and why."#;
    PromptTemplate::new("judge-v1", system, user)
}

fn builtin_templates() -> Vec<PromptTemplate> {
    vec![
        suggestions_v0(),
        suggestions_v1(),
        suggestions_v2_final(),
        evidence_v1(),
        evidence_v2(),
        evidence_v3(),
        evidence_v4_final(),
        judge_v1(),
    ]
}

/// Schema id paired with each template id for structured calls.
pub fn schema_for_template(template_id: &str) -> Option<&'static str> {
    match template_id {
        "suggestions-v0" | "suggestions-v1" | "suggestions-v2-final" => {
            Some(super::schema::SUGGESTION_BATCH_SCHEMA_ID)
        }
        "evidence-v1" => Some(super::schema::EVIDENCE_SINGLE_V1_SCHEMA_ID),
        "evidence-v2" | "evidence-v3" => Some(super::schema::EVIDENCE_SINGLE_SCHEMA_ID),
        "evidence-v4-final" => Some(super::schema::EVIDENCE_BATCH_SCHEMA_ID),
        _ => None,
    }
}
