#include "acd/dataset_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace acd {

using nlohmann::json;

std::string graph_to_json_line(const LabeledGraph& g, std::size_t id) {
  json j;
  j["id"] = id;
  j["n"] = g.n_nodes();
  json edges = json::array();
  for (auto [a, b] : g.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  j["labels"] = g.labels();
  j["feature_dim"] = g.feature_dim();
  j["features"] = g.features();
  j["meta"] = g.meta();
  return j.dump();
}

LabeledGraph graph_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  LabeledGraph g(j.at("n").get<std::size_t>());
  for (auto const& e : j.at("edges")) g.add_edge(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  auto labels = j.at("labels").get<Labels>();
  if (!labels.empty()) g.set_labels(std::move(labels));
  const auto dim = j.value("feature_dim", std::size_t{0});
  if (dim > 0) g.set_features(dim, j.at("features").get<std::vector<double>>());
  if (j.contains("meta")) g.meta() = j.at("meta").get<std::map<std::string, double>>();
  g.validate();
  return g;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<LabeledGraph>& graphs) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("dataset: cannot write " + path.string());
  for (std::size_t i = 0; i < graphs.size(); ++i) f << graph_to_json_line(graphs[i], i) << '\n';
  if (!f) throw std::runtime_error("dataset: write failed for " + path.string());
}

std::vector<LabeledGraph> read_jsonl(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("dataset: cannot read " + path.string());
  std::vector<LabeledGraph> out;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) out.push_back(graph_from_json_line(line));
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary dataset cache assumes little-endian host");

template <class T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::ifstream& f) {
  T v;
  if (!f.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("dataset: truncated binary cache");
  return v;
}

}  // namespace

void write_binary(const std::filesystem::path& path, const std::vector<LabeledGraph>& graphs) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("dataset: cannot write " + path.string());
  f.write("ACDG", 4);
  put<std::uint32_t>(f, 1);
  put<std::uint64_t>(f, graphs.size());
  for (auto const& g : graphs) {
    put<std::uint64_t>(f, g.n_nodes());
    const auto edges = g.edges();
    put<std::uint64_t>(f, edges.size());
    for (auto [a, b] : edges) {
      put<std::uint32_t>(f, static_cast<std::uint32_t>(a));
      put<std::uint32_t>(f, static_cast<std::uint32_t>(b));
    }
    put<std::uint64_t>(f, g.labels().size());
    for (int l : g.labels()) put<std::int32_t>(f, l);
    put<std::uint64_t>(f, g.feature_dim());
    for (double v : g.features()) put<double>(f, v);
    put<std::uint64_t>(f, g.meta().size());
    for (auto const& [k, v] : g.meta()) {
      put<std::uint32_t>(f, static_cast<std::uint32_t>(k.size()));
      f.write(k.data(), static_cast<std::streamsize>(k.size()));
      put<double>(f, v);
    }
  }
  if (!f) throw std::runtime_error("dataset: write failed for " + path.string());
}

std::vector<LabeledGraph> read_binary(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("dataset: cannot read " + path.string());
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "ACDG", 4) != 0) throw std::runtime_error("dataset: bad binary magic");
  if (get<std::uint32_t>(f) != 1) throw std::runtime_error("dataset: unsupported binary version");
  const auto count = get<std::uint64_t>(f);
  std::vector<LabeledGraph> out;
  out.reserve(count);
  for (std::uint64_t gi = 0; gi < count; ++gi) {
    LabeledGraph g(get<std::uint64_t>(f));
    const auto ne = get<std::uint64_t>(f);
    for (std::uint64_t e = 0; e < ne; ++e) {
      const auto a = get<std::uint32_t>(f);
      const auto b = get<std::uint32_t>(f);
      g.add_edge(a, b);
    }
    Labels labels(get<std::uint64_t>(f));
    for (auto& l : labels) l = get<std::int32_t>(f);
    if (!labels.empty()) g.set_labels(std::move(labels));
    const auto dim = get<std::uint64_t>(f);
    if (dim > 0) {
      std::vector<double> feats(dim * g.n_nodes());
      for (auto& v : feats) v = get<double>(f);
      g.set_features(dim, std::move(feats));
    }
    const auto nm = get<std::uint64_t>(f);
    for (std::uint64_t m = 0; m < nm; ++m) {
      std::string key(get<std::uint32_t>(f), '\0');
      f.read(key.data(), static_cast<std::streamsize>(key.size()));
      g.meta()[key] = get<double>(f);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<LabeledGraph> load_dataset(const std::filesystem::path& path) {
  const std::filesystem::path cache = path.string() + ".bin";
  if (std::filesystem::exists(cache)) return read_binary(cache);
  return read_jsonl(path);
}

}  // namespace acd
