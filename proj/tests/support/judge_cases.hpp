#pragma once

#include <array>
#include <string>
#include <vector>

#include "tf2/error.hpp"
#include "tf2/judge.hpp"

namespace tf2::testing {

enum class Expect { Scores, NoJson, Schema, Range };

struct JudgeCase {
    std::string name;
    std::string raw;
    Expect expect;
    std::array<int, 5> scores{};
};

/// Judge replies seen in the wild, and their expected parse.
inline std::vector<JudgeCase> judge_parse_cases() {
    return {
        {"flat object",
         R"({"accuracy": 5, "fluency": 4, "coherence": 5, "style": 4, "cultural": 5})",
         Expect::Scores, {5, 4, 5, 4, 5}},
        {"json code fence",
         "```json\n{\"accuracy\": 4, \"fluency\": 4, \"coherence\": 3, \"style\": 4, "
         "\"cultural\": 5}\n```",
         Expect::Scores, {4, 4, 3, 4, 5}},
        {"bare code fence",
         "```\n{\"accuracy\": 3, \"fluency\": 3, \"coherence\": 3, \"style\": 3, "
         "\"cultural\": 3}\n```",
         Expect::Scores, {3, 3, 3, 3, 3}},
        {"prose around the object",
         "Here is my evaluation:\n{\"accuracy\": 5, \"fluency\": 5, \"coherence\": 4, "
         "\"style\": 5, \"cultural\": 4}\nLet me know if you need more.",
         Expect::Scores, {5, 5, 4, 5, 4}},
        {"nested score objects",
         R"({"accuracy": {"score": 4, "justification": "minor omission"},
             "fluency": {"score": 5, "justification": "natural"},
             "coherence": {"score": 5, "justification": "clear"},
             "style": {"score": 4, "justification": "slightly flat"},
             "cultural": {"score": 5, "justification": "idioms adapted"}})",
         Expect::Scores, {4, 5, 5, 4, 5}},
        {"cultural_pragmatic key",
         R"({"accuracy": 2, "fluency": 3, "coherence": 4, "style": 5, "cultural_pragmatic": 1})",
         Expect::Scores, {2, 3, 4, 5, 1}},
        {"capitalized keys with a slash",
         R"({"Accuracy": 5, "Fluency": 5, "Coherence": 5, "Style": 5, "Cultural/Pragmatic": 4})",
         Expect::Scores, {5, 5, 5, 5, 4}},
        {"justifications object",
         R"({"accuracy": 4, "fluency": 4, "coherence": 4, "style": 4, "cultural": 4,
             "justifications": {"accuracy": "faithful", "style": "plain"}})",
         Expect::Scores, {4, 4, 4, 4, 4}},
        {"suffixed justification keys",
         R"({"accuracy": 5, "accuracy_justification": "exact", "fluency": 4,
             "fluency_justification": "ok", "coherence": 5, "style": 5, "cultural": 5})",
         Expect::Scores, {5, 4, 5, 5, 5}},
        {"non-JSON braces before the object",
         "Scores {see below}:\n{\"accuracy\": 1, \"fluency\": 2, \"coherence\": 3, "
         "\"style\": 4, \"cultural\": 5}",
         Expect::Scores, {1, 2, 3, 4, 5}},
        {"braces inside strings",
         R"({"accuracy": {"score": 5, "justification": "kept {the} moral }"}, "fluency": 5,
             "coherence": 5, "style": 5, "cultural": 5})",
         Expect::Scores, {5, 5, 5, 5, 5}},
        {"extra keys ignored",
         R"({"accuracy": 3, "fluency": 4, "coherence": 3, "style": 4, "cultural": 3,
             "overall": 3.4, "comment": "fine"})",
         Expect::Scores, {3, 4, 3, 4, 3}},
        {"missing key", R"({"accuracy": 5, "fluency": 5, "coherence": 5, "cultural": 5})",
         Expect::Schema},
        {"nested object without score",
         R"({"accuracy": {"justification": "good"}, "fluency": 5, "coherence": 5, "style": 5,
             "cultural": 5})",
         Expect::Schema},
        {"score above range",
         R"({"accuracy": 6, "fluency": 5, "coherence": 5, "style": 5, "cultural": 5})",
         Expect::Range},
        {"score of zero",
         R"({"accuracy": 5, "fluency": 0, "coherence": 5, "style": 5, "cultural": 5})",
         Expect::Range},
        {"non-integer score",
         R"({"accuracy": 4.5, "fluency": 5, "coherence": 5, "style": 5, "cultural": 5})",
         Expect::Range},
        {"score as a string",
         R"({"accuracy": "5", "fluency": 5, "coherence": 5, "style": 5, "cultural": 5})",
         Expect::Range},
        {"no JSON at all", "I would rate this translation highly overall.", Expect::NoJson},
        {"truncated object", R"({"accuracy": 5, "fluency": 5, "coherence": )", Expect::NoJson},
    };
}

/// Runs one case; returns an empty string on success or a description of
/// the mismatch.
inline std::string check_judge_case(const JudgeCase& c) {
    try {
        const auto parsed = judge::parse_judge_response(c.raw);
        if (c.expect != Expect::Scores) {
            return "parsed but an error was expected";
        }
        if (parsed.scores != c.scores) {
            return "wrong scores";
        }
        return "";
    } catch (const NoJsonObjectError&) {
        return c.expect == Expect::NoJson ? "" : "unexpected NoJsonObjectError";
    } catch (const SchemaError&) {
        return c.expect == Expect::Schema ? "" : "unexpected SchemaError";
    } catch (const RangeError&) {
        return c.expect == Expect::Range ? "" : "unexpected RangeError";
    } catch (const std::exception& e) {
        return std::string("unexpected exception: ") + e.what();
    }
}

} // namespace tf2::testing
