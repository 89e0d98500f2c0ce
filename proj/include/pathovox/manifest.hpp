#ifndef PATHOVOX_MANIFEST_HPP
#define PATHOVOX_MANIFEST_HPP

// Corpus manifest: one CSV row per recording with its label, source corpus
// and an embedding path template containing a {layer} placeholder.

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "pathovox/core.hpp"

namespace pathovox {

struct ManifestRow {
    std::string id;
    std::string label;
    std::string corpus;
    std::string emb_template;
};

inline std::string substitute_layer(const std::string& tmpl, int layer) {
    const std::string key = "{layer}";
    std::size_t pos = tmpl.find(key);
    if (pos == std::string::npos)
        fail_data("manifest_no_placeholder",
                  "embedding template lacks {layer} placeholder: " + tmpl);
    std::string out = tmpl;
    while (pos != std::string::npos) {
        out.replace(pos, key.size(), std::to_string(layer));
        pos = out.find(key, pos);
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace detail

inline std::vector<ManifestRow> parse_manifest(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line))
        fail_data("manifest_empty", "manifest is empty: " + origin);
    detail::strip_cr(line);
    if (line != "id,label,corpus,emb_template")
        fail_data("manifest_bad_header",
                  "manifest header must be 'id,label,corpus,emb_template', got '" + line +
                      "' in " + origin);

    std::vector<ManifestRow> rows;
    std::unordered_set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 4)
            fail_data("manifest_bad_row", origin + ":" + std::to_string(lineno) +
                                              ": expected 4 fields, got " +
                                              std::to_string(fields.size()));
        for (const auto& f : fields)
            if (f.empty())
                fail_data("manifest_empty_field",
                          origin + ":" + std::to_string(lineno) + ": empty field");
        if (!seen.insert(fields[0]).second)
            fail_data("manifest_duplicate_id",
                      origin + ":" + std::to_string(lineno) + ": duplicate id " + fields[0]);
        rows.push_back({fields[0], fields[1], fields[2], fields[3]});
    }
    if (rows.empty())
        fail_data("manifest_no_rows", "manifest has a header but no rows: " + origin);
    return rows;
}

inline std::vector<ManifestRow> load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("manifest_io", "cannot open manifest: " + path);
    return parse_manifest(in, path);
}

inline void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_data("manifest_io", "cannot write manifest: " + path);
    out << "id,label,corpus,emb_template\n";
    for (const auto& r : rows)
        out << r.id << ',' << r.label << ',' << r.corpus << ',' << r.emb_template << '\n';
    if (!out) fail_data("manifest_io", "write failed: " + path);
}

}  // namespace pathovox

#endif
