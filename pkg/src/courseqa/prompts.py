"""Embedded prompt templates for the three model calls.

Placeholders are substituted with str.replace, never str.format, because the
verifier template contains literal JSON braces.
"""

REWRITE_PROMPT = """You are an assistant that rewrites vague or follow-up user questions based on previous conversation history.
Given the chat history and current question, rewrite the question to make it fully self-contained, specific, and intent-aware.

CHAT HISTORY:
{memory}

CURRENT QUESTION:
{current_question}

REWRITTEN QUESTION:
"""

ANSWER_PROMPT = """DOCUMENT:
{document}

QUESTION:
{question}

INSTRUCTIONS:
Answer the user's QUESTION using the DOCUMENT text above.
Keep your answer grounded in the facts of the DOCUMENT.
If the DOCUMENT does not contain the facts to answer the QUESTION,
give a response based on your knowledge.

Answer concisely and factually without extra commentary:
"""

VERIFIER_PROMPT = """Your task is to evaluate whether the ANSWER correctly aligns with the ONTOLOGY provided below.

Return ONLY a JSON response in the format:
{
"validation_result": "Pass" or "Not Pass",
"confidence_score": CONFIDENCE_SCORE_HERE (between 0 and 1),
"reasoning": "A brief explanation of why the answer is valid or not."
}

DO NOT include anything outside of this JSON structure.

Here are a few examples:

---
Example 1 (Cybersecurity - Valid Answer, High Confidence):
QUESTION: What is a vulnerability in cybersecurity?
ANSWER: A vulnerability is a weakness in a system that can be exploited by an attacker.
EXPECTED VALIDATION RESPONSE:
{
"validation_result": "Pass",
"confidence_score": 0.95,
"reasoning": "Answer maps to 'system, can_expose, vulnerability' and 'attacker, can_exploit,
vulnerability'."
}

---
Example 2 (Cloud Computing - Valid Answer, High Confidence):
QUESTION: What is virtualization in cloud computing?
ANSWER: Virtualization is a technique that allows multiple virtual machines to run on a single
physical system.
EXPECTED VALIDATION RESPONSE:
{
"validation_result": "Pass",
"confidence_score": 0.92,
"reasoning": "Answer maps to 'Concept/technique = Virtualization' in cloud computing ontology."
}

---
Example 3 (Cybersecurity - Valid Answer, Medium-High Confidence):
QUESTION: What tool can be used to analyze vulnerabilities?
ANSWER: A logging tool.
EXPECTED VALIDATION RESPONSE:
{
"validation_result": "Pass",
"confidence_score": 0.68,
"reasoning": "Although brief, the answer is grounded in concepts like 'tool' and 'can_analyze
vulnerability'."
}

---
Example 4 (Cloud Computing - Valid Answer, Medium-High Confidence):
QUESTION: What techniques are used for load distribution in cloud computing?
ANSWER: Load balancing and auto-scaling are common techniques.
EXPECTED VALIDATION RESPONSE:
{
"validation_result": "Pass",
"confidence_score": 0.7,
"reasoning": "Answer correctly reflects cloud computing techniques from the ontology."
}

---
Example 5 (Cybersecurity - Vague Answer, Low Confidence):
QUESTION: What are security techniques in cybersecurity?
ANSWER: Techniques are used to protect systems.
EXPECTED VALIDATION RESPONSE:
{
"validation_result": "Not Pass",
"confidence_score": 0.4,
"reasoning": "Answer is too vague and not grounded in specific ontology concepts like
'Risk Assessment' or 'HoneyPot'."
}

---
Example 6 (Cloud Computing - Vague Answer, Low Confidence):
QUESTION: What are characteristics of cloud computing?
ANSWER: Cloud computing has many features.
EXPECTED VALIDATION RESPONSE:
{
"validation_result": "Not Pass",
"confidence_score": 0.35,
"reasoning": "Answer is too vague and does not mention ontology-grounded concepts like
'on-demand self-service' or 'resource pooling'."
}

---
Example 7 (Neither - Irrelevant Answer, Zero Confidence):
QUESTION: What is the capital of France?
ANSWER: Paris is the capital of France.
EXPECTED VALIDATION RESPONSE:
{
"validation_result": "Not Pass",
"confidence_score": 0.0,
"reasoning": "Answer is factually correct but completely unrelated to cybersecurity or
cloud computing ontology."
}

Now evaluate the actual input below:

QUESTION:
{question}

ANSWER:
{answer}

ONTOLOGY:
{ontology_text}
"""
