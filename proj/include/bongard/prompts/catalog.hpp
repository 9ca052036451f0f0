#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bongard/core/errors.hpp"
#include "bongard/core/types.hpp"

namespace bongard::prompts {

// Fills <slot> placeholders in one pass over the template. Model text is
// inserted as-is and never re-scanned, so substituted content cannot trigger
// further substitution. Slots not present in the map are left untouched
// (several templates contain angle-bracket text that is part of the prompt).
inline std::string expand(const std::string& text, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      std::size_t close = text.find('>', i + 1);
      if (close != std::string::npos) {
        auto it = slots.find(text.substr(i + 1, close - i - 1));
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

namespace templates {

inline constexpr const char* kBpDescription =
    R"PT(A Bongard Problem is composed of left and right sides separated by a line. Each side contains six images. All images belonging to one side present a common concept, which is lacking in all images from the other side. The goal is to describe the rule that fits all images on the left side, but none on the right, and, conversely, the rule that fits all images on the right side, but none on the left. The description of the rule should be simple and concise.
Example 1: All shapes on left are small. All shapes on right are big.
Example 2: The left side contains circles. The right side contains triangles.)PT";

inline constexpr const char* kWorkedExample1 =
    "All shapes on left are small. All shapes on right are big.";
inline constexpr const char* kWorkedExample2 =
    "The left side contains circles. The right side contains triangles.";

inline constexpr const char* kDirectSolver =
    R"PT(You are a vision understanding module designed to provide short, clear and accurate answers. Your goal is to solve the provided Bongard Problem. What is the difference between the two sides of the problem?)PT";

inline constexpr const char* kCaptionPanel =
    R"PT(The provided image is a part of an abstract visual reasoning problem. Describe all crucial properties of the image. Your description should be as concise as possible. Focus on the most important details. The image is provided correctly. Respond only with descriptions.)PT";

inline constexpr const char* kDescriptiveSynthesis =
    R"PT(You are a vision understanding module designed to provide short, clear and accurate answers. Your goal is to solve the provided Bongard Problem using descriptions of its images.

LEFT IMAGES:
<left_descriptions>

RIGHT IMAGES:
<right_descriptions>

What is the difference between the two sides of the problem?)PT";

inline constexpr const char* kIterativeSideFraming =
    R"PT(You'll receive a sequence of images that are a part of a single side of a Bongard Problem. The images will be provided one by one. Your goal is to find a common concept presented in all images. Your description should be as concise as possible. Focus on the most important details. Try to enhance the description of the concept after each image.

The image is always provided correctly. Respond only to the specific request. The first image will be provided in the next message.)PT";

inline constexpr const char* kIterativeSynthesis =
    R"PT(You are a vision understanding module designed to provide short, clear and accurate answers. Your goal is to solve the provided Bongard Problem using descriptions of two sides of the problem.

LEFT SIDE DESCRIPTION:
<left_description>

RIGHT SIDE DESCRIPTION:
<right_description>

What is the difference between the two sides of the problem?)PT";

inline constexpr const char* kIterativeLastImage =
    "That was the last image. Now provide your final answer.";

inline constexpr const char* kComparePair =
    R"PT(You are given two images extracted from the left and right side of a Bongard Problem, respectively. Your goal is to compare the images. Your comparison should be as concise as possible.)PT";

inline constexpr const char* kContrastiveSynthesis =
    R"PT(You are a vision understanding module designed to provide short, clear and accurate answers. Your goal is to solve the provided Bongard Problem using comparisons between pairs of images. Each pair contains one image from the left and one from the right side of the problem.

COMPARISONS:
<comparisons>

What is the difference between the two sides of the problem?)PT";

inline constexpr const char* kContrastiveIterativeFraming =
    R"PT(You are a vision understanding module designed to provide short, clear and accurate answers. Your goal is to solve the provided Bongard Problem. You'll receive a sequence of image pairs. Each pair contains one image from the left and one from the right side of the problem. In each step compare the two images and refine the definitions of concepts that describe left and right sides of the problem. Your description should be as concise as possible. Focus on the most important details. The first pair will be provided in the next message.)PT";

inline constexpr const char* kContrastiveLastPair =
    "It was the last pair of images. What is the difference between the two sides of the problem?";

inline constexpr const char* kClassifySides =
    R"PT(You are a vision understanding module designed to provide short, clear and accurate answers. Your goal is to classify two test images to the corresponding side of the Bongard Problem, LEFT or RIGHT. Each image belongs to exactly one class. The test images belong to different classes.

The images are always provided correctly. Respond only to the specific request. Respond in json using the following format.

FIRST EXAMPLE:
Left images: <small shapes>
Right images: <big shapes>

First test image: <small shape>
Second test image: <big shape>

Response: 
{
    "first": {
        "explanation": "The test image shows a small shape, similarly as all images on the left side. Conversely, the images on the right side feature big shapes.",
        "concept": "small vs big",
        "answer": "LEFT"
    }, 
    "second": {
        "explanation": "The test image shows a big shape, similarly as all images on right. The images on left, on the other hand, feature small shapes.",
        "concept": "small vs big",
        "answer": "RIGHT"
    }
}
END OF FIRST EXAMPLE

SECOND EXAMPLE:
Left images: <circles>
Right images: <triangles>

First test image: <triangle>
Second test image: <circle>

Response: 
{
    "first": {
        "explanation": "The test image shows a triangle, which matches all images on right. In contrast, the left side images feature circles.",
        "concept": "circles vs triangles",
        "answer": "RIGHT"
    }, 
    "second": {
        "explanation": "The test image shows a circle, which matches all images on left. Conversely, the right side images feature triangles.",
        "concept": "circles vs triangles",
        "answer": "LEFT"
    }
}
END OF SECOND EXAMPLE)PT";

inline constexpr const char* kAssessAnswer =
    R"PT(You are a vision understanding module designed to provide short, clear and accurate answers. Your goal is to evaluate the correctness of the provided answer to the given Bongard Problem. All images are provided correctly. Do not explain the answer, just evaluate it. Respond 'OK' if the answer is correct, otherwise respond 'WRONG'.

User answer: <user_answer>)PT";

inline constexpr const char* kJudgeInitial =
    R"PT(You are a logic module designed to provide accurate answers. In a Bongard Problem the objective is to spot the difference between the contents of images located on the two opposite sides of the problem. You are given correct labels of these sides and must decide whether the answer provided by the user is correct and matches with those labels. Answer with 'OK' or 'WRONG'.

LEFT SIDE LABEL:
<left_label>

RIGHT SIDE LABEL:
<right_label>

USER ANSWER:
<model_answer>)PT";

inline constexpr const char* kJudgeFinal =
    R"PT(You are a logic module designed to provide accurate answers. 
In a Bongard Problem the objective is to spot the difference between the contents of images located on the two opposite sides of the problem. 
You are given correct labels of these sides and must decide whether the answer provided by the user is correct and matches with those labels. Answer with 'OK' or 'WRONG'.
The user's answer has to strictly logically match the labels, as shown in examples.

FIRST EXAMPLE: 
LEFT SIDE LABEL: All shapes are small.
RIGHT SIDE LABEL: All shapes are big.
USER ANSWER: On the left side, one of the shapes is small. On the right side, all of the shapes are big.
EVALUATION: WRONG
END OF FIRST EXAMPLE.

SECOND EXAMPLE:
LEFT SIDE LABEL: All shapes are small.
RIGHT SIDE LABEL: All shapes are big.
USER ANSWER: On the left side, all of the shapes are small. On the right side, all of the shapes are big.
EVALUATION: OK
END OF SECOND EXAMPLE.

LEFT SIDE LABEL:
<left_label>

RIGHT SIDE LABEL:
<right_label>

USER ANSWER:
<model_answer>)PT";

inline constexpr const char* kTranslateConcept =
    R"PT(Your goal is to translate a comparison concept from the geometric domain to the real-world domain. Your translations should be expressible as images.

Example: 
Geometric domain: triangles vs squares
{
  "left": {
    "concept": "pyramids"
  },
  "right": {
    "concept": "rectangular buildings"
  }
}

Give <number> unique translations for the following concept as a raw JSON array of objects (same as in the example above). 

<concept>)PT";

inline constexpr const char* kFilterImage =
    R"PT(You translated a concept comparison from geometric domain to the real-world domain as follows:

Geometric domain: <left_geometric_concept> vs <right_geometric_concept>
Real world domain: 
{
    "left": {
        "concept": <left_concept>,
        "prompt": <left_concept_description>
    },
    "right": {
        "concept": <right_concept>,
        "prompt": <right_concept_description>
    }
}

Now, you need to check if the queried image matches your translation and provides enough information to distinguish it from the other concept. Don't focus too much on the prompt. It's just a hint for you to understand the concept better.
Provided image represents <side_concept>

Give your answer in the following format:
EVALUATION: OK
EXPLANATION: <here you can provide additional information>
or
EVALUATION: REJECTED
EXPLANATION: <here you can provide additional information>)PT";

}  // namespace templates

// Named templates with placeholder slots. Built-ins ship in the binary; a
// JSON file of {name: text} can override any subset.
class PromptCatalog {
 public:
  PromptCatalog() : entries_(builtin_entries()) {}

  static const PromptCatalog& builtin() {
    static PromptCatalog catalog;
    return catalog;
  }

  const std::string& get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw core::ConfigError("unknown prompt template: " + name);
    return it->second;
  }

  std::string render(const std::string& name, const std::map<std::string, std::string>& slots) const {
    return expand(get(name), slots);
  }

  void load_overrides(const std::filesystem::path& path) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::parse(core::read_file_text(path));
    if (!doc.is_object()) throw core::ConfigError("prompt catalog file must be a JSON object");
    for (const auto& [name, text] : doc.items()) {
      if (!entries_.contains(name)) throw core::ConfigError("prompt catalog override for unknown template: " + name);
      entries_[name] = text.get<std::string>();
    }
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json doc;
    for (const auto& [name, text] : entries_) doc[name] = text;
    return doc;
  }

  static std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& [name, text] : builtin_entries()) out.push_back(name);
    return out;
  }

 private:
  static const std::map<std::string, std::string>& builtin_entries() {
    static const std::map<std::string, std::string> entries = {
        {"bp_description", templates::kBpDescription},
        {"direct_solver", templates::kDirectSolver},
        {"caption_panel", templates::kCaptionPanel},
        {"descriptive_synthesis", templates::kDescriptiveSynthesis},
        {"iterative_side_framing", templates::kIterativeSideFraming},
        {"iterative_synthesis", templates::kIterativeSynthesis},
        {"iterative_last_image", templates::kIterativeLastImage},
        {"compare_pair", templates::kComparePair},
        {"contrastive_synthesis", templates::kContrastiveSynthesis},
        {"contrastive_iterative_framing", templates::kContrastiveIterativeFraming},
        {"contrastive_last_pair", templates::kContrastiveLastPair},
        {"classify_sides", templates::kClassifySides},
        {"assess_answer", templates::kAssessAnswer},
        {"judge_initial", templates::kJudgeInitial},
        {"judge_final", templates::kJudgeFinal},
        {"translate_concept", templates::kTranslateConcept},
        {"filter_image", templates::kFilterImage},
    };
    return entries;
  }

  std::map<std::string, std::string> entries_;
};

// The task preamble every generation strategy receives: the problem
// description plus its two embedded worked examples.
struct Preamble {
  std::string task_description = templates::kBpDescription;
  std::array<std::string, 2> worked_examples = {templates::kWorkedExample1,
                                                templates::kWorkedExample2};

  static Preamble from_catalog(const PromptCatalog& catalog) {
    Preamble p;
    p.task_description = catalog.get("bp_description");
    return p;
  }
};

}  // namespace bongard::prompts
