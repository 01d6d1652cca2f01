#include "editid/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace editid {

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::Man: return "man";
    case Gender::Woman: return "woman";
    case Gender::Unknown: return "unknown";
  }
  return "unknown";
}

Gender parse_gender(std::string_view text) {
  if (text == "man") return Gender::Man;
  if (text == "woman") return Gender::Woman;
  if (text == "unknown" || text == "person") return Gender::Unknown;
  throw Error(ErrorCode::Config, "unknown gender '" + std::string(text) + "' (man, woman, unknown)");
}

LoadedGroup load_group(const DatasetGroup& group, std::vector<std::string>* warnings) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(group.image_dir))
    throw Error(ErrorCode::Io, "dataset '" + group.name + "': " + group.image_dir.string() + " is not a directory");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(group.image_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (files.empty())
    throw Error(ErrorCode::EmptyInput, "dataset '" + group.name + "' has no .ppm images in " + group.image_dir.string());

  LoadedGroup out{group.name, {}};
  std::vector<std::string> unreadable;
  for (const auto& f : files) {
    try {
      GroupImage gi;
      gi.name = f.filename().string();
      gi.path = f;
      gi.image = read_ppm(f);
      gi.image.validate();
      if (auto it = group.genders.find(gi.name); it != group.genders.end()) gi.gender = it->second;
      out.images.push_back(std::move(gi));
    } catch (const Error& e) {
      unreadable.push_back(f.filename().string() + " (" + e.what() + ")");
    }
  }
  if (!unreadable.empty()) {
    std::string msg = "dataset '" + group.name + "' has unreadable files:";
    for (const auto& u : unreadable) msg += " " + u + ";";
    throw Error(ErrorCode::Io, msg);
  }
  if (group.expected_count && *group.expected_count != static_cast<int>(out.images.size()) && warnings) {
    const int found = static_cast<int>(out.images.size());
    std::ostringstream os;
    os << "dataset '" << group.name << "': expected " << *group.expected_count << " images, found " << found;
    if (found < *group.expected_count) os << " (" << *group.expected_count - found << " missing)";
    warnings->push_back(os.str());
  }
  return out;
}

PromptSet parse_prompts(std::string_view text, std::string name) {
  PromptSet set;
  set.name = std::move(name);
  std::istringstream in{std::string(text)};
  std::string line;
  int id = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    PromptRecord r;
    r.id = ++id;
    r.text = line.substr(first, last - first + 1);
    r.gendered = r.text.find(kPersonPlaceholder) != std::string::npos;
    set.records.push_back(std::move(r));
  }
  return set;
}

PromptSet load_prompts(const std::filesystem::path& file, std::string name, std::optional<int> expected_count,
                       std::vector<std::string>* warnings) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open prompt file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  PromptSet set = parse_prompts(ss.str(), std::move(name));
  set.expected_count = expected_count;
  if (expected_count && *expected_count != static_cast<int>(set.records.size()) && warnings)
    warnings->push_back("prompt set '" + set.name + "': expected " + std::to_string(*expected_count) +
                        " prompts, found " + std::to_string(set.records.size()));
  return set;
}

std::string substitute_gender(const PromptRecord& record, Gender gender) {
  if (!record.gendered) return record.text;
  if (record.text.find(kPersonPlaceholder) == std::string::npos)
    throw Error(ErrorCode::InvalidInput, "gendered prompt " + std::to_string(record.id) + " has no [person] placeholder");
  const std::string word = gender == Gender::Man ? "man" : gender == Gender::Woman ? "woman" : "person";
  std::string out = record.text;
  for (auto pos = out.find(kPersonPlaceholder); pos != std::string::npos;
       pos = out.find(kPersonPlaceholder, pos + word.size()))
    out.replace(pos, kPersonPlaceholder.size(), word);
  return out;
}

std::vector<Pairing> default_pairing() {
  return {{"unsplash", "short"}, {"chineseid", "editable-long"}, {"generateid", "manual"}};
}

std::uint64_t case_seed(std::uint64_t global_seed, std::string_view image_name, int prompt_id) {
  std::uint64_t h = fnv1a64(std::to_string(global_seed));
  h = fnv1a64("|", h);
  h = fnv1a64(image_name, h);
  h = fnv1a64("|", h);
  return fnv1a64(std::to_string(prompt_id), h);
}

std::vector<EvalCase> pair(const std::vector<LoadedGroup>& groups, const std::vector<PromptSet>& prompt_sets,
                           const std::vector<Pairing>& pairing, std::uint64_t global_seed) {
  if (pairing.empty()) throw Error(ErrorCode::Config, "pairing is empty");
  std::vector<EvalCase> cases;
  for (const auto& p : pairing) {
    const auto g = std::find_if(groups.begin(), groups.end(), [&](const auto& x) { return x.name == p.dataset; });
    if (g == groups.end()) throw Error(ErrorCode::Config, "pairing references unknown dataset '" + p.dataset + "'");
    const auto s =
        std::find_if(prompt_sets.begin(), prompt_sets.end(), [&](const auto& x) { return x.name == p.prompts; });
    if (s == prompt_sets.end())
      throw Error(ErrorCode::Config, "pairing references unknown prompt set '" + p.prompts + "'");
    if (g->images.empty()) throw Error(ErrorCode::EmptyInput, "dataset '" + g->name + "' is empty");
    if (s->records.empty()) throw Error(ErrorCode::EmptyInput, "prompt set '" + s->name + "' is empty");
    for (const auto& img : g->images)
      for (const auto& rec : s->records) {
        EvalCase c;
        c.group = g->name;
        c.image_name = img.name;
        c.image = &img;
        c.prompt_set = s->name;
        c.prompt_id = rec.id;
        c.prompt = substitute_gender(rec, img.gender);
        c.pairing = g->name + "x" + s->name;
        c.id = g->name + "/" + img.name + "#" + s->name + ":" + std::to_string(rec.id);
        c.seed = case_seed(global_seed, img.name, rec.id);
        cases.push_back(std::move(c));
      }
  }
  return cases;
}

}  // namespace editid
