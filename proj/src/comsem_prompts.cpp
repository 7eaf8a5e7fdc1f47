#include "bae/comsem.hpp"

namespace bae {

namespace {

constexpr const char* kInterpretHead = R"(Instruction:
I will provide a set of tokens along with their positions (this position may vary depending on the tokenizer) and the surrounding context. Please describe what these tokens have in common using concise expressions such as "date expressions", "words ending in 'ing'", or "adjectives".
Please choose the most specific term while ensuring commonality, and avoid using overly general terms like "words", "English tokens", "high-frequency English lexemes", or "phrases".
Non-semantic or non-linguistic terms such as "BPE Subword Token" are strictly prohibited.
Any additional information, explaination, or context are strongly prohibited. Only return one phrase.

Example 1:
Token: "running" at position 3 in sentence: "She is running in the park."
Token: "eating" at position 3 in sentence: "He is eating an apple."
Token: "sleeping" at position 4 in sentence: "The baby is sleeping on the sofa."
Token: "jumping" at position 2 in sentence: "They are jumping over the fence."
Token: "talking" at position 3 in sentence: "We are talking about the project."
The commonality is: -ing verbs of human behavior

Example 2:
Token: "yesterday" at position 4 in sentence: "I went there yesterday."
Token: "last week" at position 5 in sentence: "She arrived last week."
Token: "in 1998" at position 6 in sentence: "They moved here in 1998."
Token: "last year" at position 5 in sentence: "We met last year."
The commonality is: past time expressions

Example 3:
Token: "happy" at position 4 in sentence: "She looks very happy today."
Token: "angry" at position 5 in sentence: "They were extremely angry about it."
Token: "sad" at position 4 in sentence: "He felt really sad after the call."
The commonality is: emotional adjectives

Example 4:
Token: "dog" at position 2 in sentence: "The dog barked loudly."
Token: "cat" at position 2 in sentence: "The cat chased the mouse."
Token: "bird" at position 2 in sentence: "The bird sang beautifully."
Token: "fish" at position 2 in sentence: "The fish swam gracefully in the tank."
The commonality is: animal nouns

Example 11:
Token: "sad" at position 4 in sentence: "He felt really sad after the call."
Token: "angry" at position 5 in sentence: "They were extremely angry about it."
Token: "negative" at position 4 in sentence: "She had a negative reaction to the news."
The commonality is: negative emotion adjectives

Now, please analyze the following tokens and their contexts:
)";

constexpr const char* kTestHead = R"(Background:
I will provide a token, its position in the sentence, the surrounding context, and a candidate description of the token's role or type given the context.
Your task is to judge whether the given description accurately characterizes the token in its context.
Please respond with either:
- "Yes" (if the description is accurate), or
- "No" (if it is inaccurate)
Any additional information, explaination, or context are strongly prohibited. Only return "Yes" and "No".

Example 1:
Token: "running" at position 3 in sentence: "She is running in the park."
Candidate description: "present participle"
Answer: Yes

Example 2:
Token: "dog" at position 2 in sentence: "The dog barked loudly."
Candidate description: "adjective"
Answer: No

Example 3:
Token: "quickly" at position 4 in sentence: "He ran quickly toward the exit."
Candidate description: "manner adverb"
Answer: Yes

Example 4:
Token: "first" at position 4 in sentence: "This is the first time I have seen this."
Candidate description: "ordinal number"
Answer: Yes

Example 5:
Token: "to" at position 5 in sentence: "I want to go to the store."
Candidate description: "emotional verb"
Answer: No

Example 6:
Token: "looking" at position 3 in sentence: "She is looking forward to the event."
Candidate description: "verb related to oral communication"
Answer: No

Example 22:
Token: "fish" at position 2 in sentence: "The fish swam gracefully in the tank."
Candidate description: "noun describing an animal"
Answer: Yes

Now, please analyze the following tokens, their positions, contexts, and candidate descriptions:
)";

}  // namespace

std::string format_sample_line(const TokenSample& s) {
  return "Token: \"" + s.token + "\" at position " + std::to_string(s.position) +
         " in sentence: \"" + s.context + "\"";
}

std::string interpretation_prompt(const std::vector<const TokenSample*>& samples) {
  if (samples.empty()) throw std::invalid_argument("interpretation prompt needs samples");
  std::string p = kInterpretHead;
  for (const auto* s : samples) p += format_sample_line(*s) + "\n";
  p += "The commonality is:";
  return p;
}

std::string test_prompt(const TokenSample& sample, const std::string& phrase) {
  std::string p = kTestHead;
  p += format_sample_line(sample) + "\n";
  p += "Candidate description: \"" + phrase + "\"\n";
  p += "Answer:";
  return p;
}

}  // namespace bae
