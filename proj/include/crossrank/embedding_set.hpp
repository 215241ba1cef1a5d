#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "crossrank/error.hpp"

namespace crossrank {

static_assert(std::endian::native == std::endian::little,
              "payload format is little-endian float32");

enum class Domain { A, B };

inline std::string to_string(Domain d) { return d == Domain::A ? "A" : "B"; }

inline Domain domain_from_string(const std::string& s) {
  if (s == "A") return Domain::A;
  if (s == "B") return Domain::B;
  fail_format("domain must be \"A\" or \"B\", got \"" + s + "\"");
}

struct Label {
  std::string id;
  int class_id = 0;
  std::string class_name;  // optional, empty when unnamed
};

/// A labeled, domain-tagged block of float32 feature rows.
/// Immutable after construction; operations return new values.
///
/// On-disk interchange is a JSON manifest next to a raw payload:
///
///   {
///     "count": 2, "dim": 3, "dtype": "f32le", "domain": "B",
///     "normalize": false,
///     "payload": "gallery.bin",
///     "labels": "gallery_labels.csv"
///   }
///
/// The payload is count*dim float32 little-endian values, row-major.
/// `labels` is either a relative CSV path (rows: id,class_id[,class_name])
/// or an inline array of {"id": ..., "class": ..., "name": ...} objects.
/// All paths are resolved relative to the manifest location.
struct EmbeddingSet {
  std::size_t count = 0;
  std::size_t dim = 0;
  Domain domain = Domain::B;
  std::vector<float> values;  // count*dim, row-major
  std::vector<Label> labels;  // one per row

  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
  std::span<float> row(std::size_t i) {
    return {values.data() + i * dim, dim};
  }

  double row_norm(std::size_t i) const {
    double s = 0.0;
    for (float v : row(i)) s += static_cast<double>(v) * v;
    return std::sqrt(s);
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(l.id);
    return out;
  }

  void validate() const {
    if (dim < 1) fail_validation("dim must be >= 1");
    if (values.size() != count * dim)
      fail_validation("value buffer holds " + std::to_string(values.size()) +
                      " floats, expected " + std::to_string(count * dim));
    if (labels.size() != count)
      fail_validation("label count " + std::to_string(labels.size()) +
                      " does not match row count " + std::to_string(count));
    std::unordered_set<std::string> seen;
    for (const auto& l : labels)
      if (!seen.insert(l.id).second)
        fail_validation("duplicate id \"" + l.id + "\"");
  }
};

/// Divides every row by its Euclidean norm. Idempotent.
inline EmbeddingSet l2_normalize(EmbeddingSet set) {
  for (std::size_t i = 0; i < set.count; ++i) {
    const double n = set.row_norm(i);
    if (n == 0.0)
      fail_validation("zero-norm row \"" + set.labels[i].id +
                      "\" cannot be normalized");
    for (float& v : set.row(i)) v = static_cast<float>(v / n);
  }
  return set;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

namespace detail {

inline int parse_class_id(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail_format("bad class id \"" + s + "\" in " + context);
  }
}

}  // namespace detail

inline std::vector<Label> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open labels file " + path.string());
  std::vector<Label> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 2 || fields.size() > 3)
      fail_format("labels row \"" + line + "\" must be id,class_id[,class_name]");
    Label l;
    l.id = fields[0];
    l.class_id = detail::parse_class_id(fields[1], path.string());
    if (fields.size() == 3) l.class_name = fields[2];
    labels.push_back(std::move(l));
  }
  return labels;
}

inline void write_labels_csv(const std::filesystem::path& path,
                             const std::vector<Label>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot write labels file " + path.string());
  for (const auto& l : labels) {
    if (l.id.find(',') != std::string::npos)
      fail_format("id \"" + l.id + "\" may not contain a comma");
    out << l.id << ',' << l.class_id;
    if (!l.class_name.empty()) out << ',' << l.class_name;
    out << '\n';
  }
}

inline EmbeddingSet load_embedding_set(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) fail_io("cannot open manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    fail_format("manifest " + manifest_path.string() + " is not valid JSON: " +
                e.what());
  }

  for (const char* key : {"count", "dim", "dtype", "domain", "payload"})
    if (!manifest.contains(key))
      fail_format("manifest missing required key \"" + std::string(key) + "\"");

  EmbeddingSet set;
  std::string payload_name;
  try {
    if (manifest["dtype"].get<std::string>() != "f32le")
      fail_format("unsupported dtype \"" + manifest["dtype"].get<std::string>() +
                  "\" (only f32le)");
    set.count = manifest["count"].get<std::size_t>();
    set.dim = manifest["dim"].get<std::size_t>();
    set.domain = domain_from_string(manifest["domain"].get<std::string>());
    payload_name = manifest["payload"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail_format("manifest " + manifest_path.string() + ": " + e.what());
  }
  if (set.dim < 1) fail_format("dim must be >= 1");

  const auto base = manifest_path.parent_path();
  const auto payload_path = base / payload_name;
  std::ifstream payload(payload_path, std::ios::binary);
  if (!payload) fail_io("cannot open payload " + payload_path.string());
  payload.seekg(0, std::ios::end);
  const auto actual = static_cast<std::size_t>(payload.tellg());
  const std::size_t expected = set.count * set.dim * sizeof(float);
  if (actual != expected)
    fail_format("payload size mismatch: expected " + std::to_string(expected) +
                " bytes, got " + std::to_string(actual));
  payload.seekg(0);
  set.values.resize(set.count * set.dim);
  payload.read(reinterpret_cast<char*>(set.values.data()),
               static_cast<std::streamsize>(expected));
  if (!payload) fail_io("short read from payload " + payload_path.string());

  if (!manifest.contains("labels"))
    fail_format("manifest missing required key \"labels\"");
  const auto& labels_node = manifest["labels"];
  if (labels_node.is_string()) {
    set.labels = read_labels_csv(base / labels_node.get<std::string>());
  } else if (labels_node.is_array()) {
    try {
      for (const auto& item : labels_node) {
        Label l;
        l.id = item.at("id").get<std::string>();
        l.class_id = item.at("class").get<int>();
        if (item.contains("name")) l.class_name = item["name"].get<std::string>();
        set.labels.push_back(std::move(l));
      }
    } catch (const nlohmann::json::exception& e) {
      fail_format(std::string("bad inline label entry: ") + e.what());
    }
  } else {
    fail_format("\"labels\" must be a path or an inline array");
  }

  set.validate();
  if (manifest.value("normalize", false)) set = l2_normalize(std::move(set));
  return set;
}

/// Writes manifest + payload + labels CSV next to `manifest_path`.
/// Payload and labels filenames derive from the manifest stem, so a
/// saved set loads back bit-identically.
inline void save_embedding_set(const EmbeddingSet& set,
                               const std::filesystem::path& manifest_path) {
  set.validate();
  const auto base = manifest_path.parent_path();
  const auto stem = manifest_path.stem().string();
  const std::string payload_name = stem + ".bin";
  const std::string labels_name = stem + "_labels.csv";

  {
    std::ofstream payload(base / payload_name, std::ios::binary);
    if (!payload) fail_io("cannot write payload " + (base / payload_name).string());
    payload.write(reinterpret_cast<const char*>(set.values.data()),
                  static_cast<std::streamsize>(set.values.size() * sizeof(float)));
  }
  write_labels_csv(base / labels_name, set.labels);

  nlohmann::json manifest{
      {"count", set.count},   {"dim", set.dim},
      {"dtype", "f32le"},     {"domain", to_string(set.domain)},
      {"normalize", false},   {"payload", payload_name},
      {"labels", labels_name},
  };
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) fail_io("cannot write manifest " + manifest_path.string());
  out << manifest.dump(2) << '\n';
}

/// Zero-shot split contract: train and test classes must be disjoint,
/// and no evaluation-time class may appear in the train set.
struct SplitManifest {
  std::set<int> train_classes;
  std::set<int> test_classes;

  void validate() const {
    for (int c : test_classes)
      if (train_classes.count(c))
        fail_validation("class " + std::to_string(c) +
                        " appears in both train and test splits");
  }
};

/// Reports every gallery/query class that leaks from the train split.
/// An empty report means the zero-shot contract holds.
inline std::vector<std::string> validate_zero_shot(const EmbeddingSet& gallery,
                                                   const EmbeddingSet& query,
                                                   const SplitManifest& split) {
  split.validate();
  std::vector<std::string> report;
  std::set<int> flagged;
  auto scan = [&](const EmbeddingSet& set, const char* name) {
    for (const auto& l : set.labels)
      if (split.train_classes.count(l.class_id) &&
          flagged.insert(l.class_id).second)
        report.push_back("class " + std::to_string(l.class_id) +
                         " leaks from train into " + name);
  };
  scan(gallery, "gallery");
  scan(query, "query");
  return report;
}

}  // namespace crossrank
