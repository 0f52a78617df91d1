#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qaguard {

struct QAExample {
    std::string id;
    std::string question;
    std::vector<std::string> answers;  // alias set, non-empty
    std::string entity_type;
    std::optional<std::vector<std::string>> augmentations;

    void validate() const;
};

/// Dataset JSONL: {"id","question","answers":[...],"entity_type","augmentations"?}.
std::vector<QAExample> load_dataset(const std::filesystem::path& path);
void write_dataset_jsonl(const std::filesystem::path& path, std::span<const QAExample> examples);

/// Entity type -> candidate surface strings, standing in for NER-driven substitute
/// suggestion.
class Gazetteer {
public:
    Gazetteer() = default;
    explicit Gazetteer(std::map<std::string, std::vector<std::string>> entries);

    /// JSON object of string arrays, e.g. {"GPE": ["Oslo", ...]}.
    static Gazetteer load(const std::filesystem::path& path);
    static Gazetteer parse(std::string_view json_text);

    /// Empty span when the type is unknown.
    std::span<const std::string> candidates(std::string_view entity_type) const;
    const std::map<std::string, std::vector<std::string>, std::less<>>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    void write(const std::filesystem::path& path) const;

private:
    std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

}  // namespace qaguard
