#include "qaguard/dataset.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qaguard/errors.hpp"

namespace qaguard {

using json = nlohmann::json;

void QAExample::validate() const {
    if (id.empty()) throw ValidationError("example with empty id");
    if (answers.empty()) throw ValidationError("example '" + id + "' has no answers");
    for (const auto& a : answers) {
        if (a.empty()) throw ValidationError("example '" + id + "' has an empty answer alias");
    }
}

std::vector<QAExample> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset file " + path.string());

    std::vector<QAExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        QAExample ex;
        try {
            const json j = json::parse(line);
            ex.id = j.at("id").get<std::string>();
            ex.question = j.at("question").get<std::string>();
            ex.answers = j.at("answers").get<std::vector<std::string>>();
            ex.entity_type = j.value("entity_type", std::string{});
            if (j.contains("augmentations") && !j["augmentations"].is_null()) {
                ex.augmentations = j["augmentations"].get<std::vector<std::string>>();
            }
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        ex.validate();
        out.push_back(std::move(ex));
    }
    if (out.empty()) throw ValidationError("dataset file " + path.string() + " is empty");
    return out;
}

void write_dataset_jsonl(const std::filesystem::path& path, std::span<const QAExample> examples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    for (const auto& ex : examples) {
        json j{{"id", ex.id},
               {"question", ex.question},
               {"answers", ex.answers},
               {"entity_type", ex.entity_type}};
        if (ex.augmentations) j["augmentations"] = *ex.augmentations;
        out << j.dump() << '\n';
    }
}

Gazetteer::Gazetteer(std::map<std::string, std::vector<std::string>> entries)
    : entries_(entries.begin(), entries.end()) {}

Gazetteer Gazetteer::parse(std::string_view json_text) {
    try {
        const json j = json::parse(json_text);
        if (!j.is_object()) throw ParseError("gazetteer must be a JSON object");
        std::map<std::string, std::vector<std::string>> entries;
        for (const auto& [type, list] : j.items()) {
            entries[type] = list.get<std::vector<std::string>>();
        }
        return Gazetteer(std::move(entries));
    } catch (const json::exception& e) {
        throw ParseError(std::string("gazetteer: ") + e.what());
    }
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open gazetteer file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::span<const std::string> Gazetteer::candidates(std::string_view entity_type) const {
    const auto it = entries_.find(entity_type);
    if (it == entries_.end()) return {};
    return it->second;
}

void Gazetteer::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    json j = json::object();
    for (const auto& [type, list] : entries_) j[type] = list;
    out << j.dump(2) << '\n';
}

}  // namespace qaguard
