#pragma once

// Dataset manifest: one record per line, tab separated:
//   id <TAB> image_path <TAB> mask_path <TAB> type <TAB> seed
// Relative paths resolve against the manifest's directory. Blank lines and
// lines starting with '#' are ignored.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "ffrt/data/pnm.hpp"
#include "ffrt/data/synth.hpp"

namespace ffrt {

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path mask;
  ManipulationType type = ManipulationType::authentic;
  std::uint64_t seed = 0;
};

inline std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::filesystem::path& base = {}) {
  std::vector<ManifestEntry> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == '\t') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    require(f.size() == 5, ErrorKind::parse, "manifest line ", lineno, ": expected 5 tab-separated fields, got ",
            f.size());
    ManifestEntry e;
    e.id = f[0];
    require(!e.id.empty(), ErrorKind::parse, "manifest line ", lineno, ": empty id");
    e.image = f[1];
    e.mask = f[2];
    if (e.image.is_relative()) e.image = base / e.image;
    if (e.mask.is_relative()) e.mask = base / e.mask;
    try {
      e.type = parse_manipulation_type(f[3]);
    } catch (const Error&) {
      fail(ErrorKind::parse, "manifest line ", lineno, ": unknown type '", f[3], "'");
    }
    const auto [p, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), e.seed);
    require(ec == std::errc() && p == f[4].data() + f[4].size(), ErrorKind::parse, "manifest line ", lineno,
            ": bad seed '", f[4], "'");
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

// Paths are written relative to `base` when they live below it.
inline std::string format_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& base = {}) {
  std::string out;
  auto rel = [&](const std::filesystem::path& p) {
    if (base.empty()) return p.generic_string();
    const auto r = p.lexically_relative(base);
    return (r.empty() || r.native().starts_with("..")) ? p.generic_string() : r.generic_string();
  };
  for (const auto& e : entries)
    out += e.id + "\t" + rel(e.image) + "\t" + rel(e.mask) + "\t" + to_string(e.type) + "\t" +
           std::to_string(e.seed) + "\n";
  return out;
}

struct CorpusSpec {
  std::size_t count = 32;
  std::uint64_t seed = 1;
  int height = 64;
  int width = 64;
  int authentic_every = 0;  // 0 = manipulated only
  std::vector<ManipulationType> types;  // empty = cycle splice, copy_move, removal
};

inline ManipulationType corpus_type(const CorpusSpec& spec, std::size_t i) {
  if (!spec.types.empty() && (spec.authentic_every <= 0 || (i + 1) % spec.authentic_every != 0))
    return spec.types[i % spec.types.size()];
  return corpus_type(i, spec.authentic_every);
}

inline std::uint64_t corpus_seed(const CorpusSpec& spec, std::size_t i) { return detail::mix_seed(spec.seed, 1000 + i); }

inline std::vector<Sample> make_corpus(const CorpusSpec& spec) {
  std::vector<Sample> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    SynthSpec s;
    s.type = corpus_type(spec, i);
    s.height = spec.height;
    s.width = spec.width;
    out.push_back(synth_sample(corpus_seed(spec, i), s));
  }
  return out;
}

// Writes images, masks and manifest.tsv into dir; returns the entries.
inline std::vector<ManifestEntry> write_corpus(const std::filesystem::path& dir, const std::vector<Sample>& samples) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "s%05zu", i);
    ManifestEntry e{id, dir / (std::string(id) + ".ppm"), dir / (std::string(id) + "_mask.pgm"), samples[i].meta.type,
                    samples[i].meta.seed};
    write_pnm(e.image, samples[i].image);
    write_pnm(e.mask, samples[i].mask);
    entries.push_back(std::move(e));
  }
  write_file_atomic(dir / "manifest.tsv", format_manifest(entries, dir));
  return entries;
}

}  // namespace ffrt
