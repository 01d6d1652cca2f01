#pragma once

// IBench inputs: image groups, prompt sets, pairing and gender substitution.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "editid/image.hpp"

namespace editid {

enum class Gender { Man, Woman, Unknown };
std::string_view to_string(Gender g);
Gender parse_gender(std::string_view text);

struct DatasetGroup {
  std::string name;  // unsplash, chineseid, generateid or a custom name
  std::filesystem::path image_dir;
  std::optional<int> expected_count;
  std::map<std::string, Gender> genders;  // by file name; missing = Unknown
};

struct GroupImage {
  std::string name;  // file name
  std::filesystem::path path;
  ImageBuffer image;
  Gender gender = Gender::Unknown;
};

struct LoadedGroup {
  std::string name;
  std::vector<GroupImage> images;  // lexicographic by file name
};

/// Reads every .ppm in the directory. Unreadable files are collected and
/// reported together (Io); an empty directory is EmptyInput; a count that
/// differs from expected_count only appends to `warnings`.
LoadedGroup load_group(const DatasetGroup& group, std::vector<std::string>* warnings = nullptr);

inline constexpr std::string_view kPersonPlaceholder = "[person]";

struct PromptRecord {
  int id = 0;  // 1-based among the non-comment lines
  std::string text;
  bool gendered = false;
};

struct PromptSet {
  std::string name;  // short, editable-long, manual or custom
  std::vector<PromptRecord> records;
  std::optional<int> expected_count;
};

/// One prompt per line; blank lines and lines starting with '#' are skipped.
/// A record is gendered iff it contains the [person] placeholder.
PromptSet parse_prompts(std::string_view text, std::string name = "custom");
PromptSet load_prompts(const std::filesystem::path& file, std::string name,
                       std::optional<int> expected_count = {}, std::vector<std::string>* warnings = nullptr);

/// Replaces every [person] with man/woman, or "person" when unknown.
/// Non-gendered records come back unchanged.
std::string substitute_gender(const PromptRecord& record, Gender gender);

struct Pairing {
  std::string dataset;
  std::string prompts;
};

/// unsplash x short, chineseid x editable-long, generateid x manual.
std::vector<Pairing> default_pairing();

struct EvalCase {
  std::string id;  // "<group>/<image>#<prompt set>:<prompt id>"
  std::string pairing;  // "<group>x<prompt set>"
  std::string group;
  std::string image_name;
  const GroupImage* image = nullptr;
  std::string prompt_set;
  int prompt_id = 0;
  std::string prompt;  // after gender substitution
  std::uint64_t seed = 0;
};

/// Stable per-case seed from (global seed, image name, prompt id).
std::uint64_t case_seed(std::uint64_t global_seed, std::string_view image_name, int prompt_id);

/// Cross product per pairing, in pairing order, then image order, then
/// prompt order. Dangling names are Config errors; empty sets EmptyInput.
std::vector<EvalCase> pair(const std::vector<LoadedGroup>& groups, const std::vector<PromptSet>& prompt_sets,
                           const std::vector<Pairing>& pairing, std::uint64_t global_seed);

}  // namespace editid
