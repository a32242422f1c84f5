#include "ctxspot/features.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ctxspot/errors.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little, "feature files are little-endian");

namespace ctxspot {

std::filesystem::path feature_sidecar_path(const std::filesystem::path& bin_path) {
  std::string s = bin_path.string();
  const std::string suffix = ".bin";
  if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
    s.resize(s.size() - suffix.size());
  return s + ".json";
}

FeatureSequence load_features(const std::filesystem::path& bin_path) {
  const auto side = feature_sidecar_path(bin_path);
  std::ifstream meta_in(side);
  if (!meta_in) throw IoError("cannot open feature sidecar " + side.string());
  std::stringstream ss;
  ss << meta_in.rdbuf();
  long long rows = 0, cols = 0;
  FeatureSequence seq;
  try {
    const auto meta = nlohmann::json::parse(ss.str());
    rows = meta.at("rows").get<long long>();
    cols = meta.at("cols").get<long long>();
    seq.video_id = meta.at("video_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(side.string() + ": " + e.what());
  }
  if (rows <= 0 || cols <= 0)
    throw FormatError(side.string() + ": rows and cols must be positive");

  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw IoError("cannot open features " + bin_path.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<long long>(in.tellg());
  in.seekg(0);
  if (bytes != rows * cols * static_cast<long long>(sizeof(float)))
    throw FormatError(bin_path.string() + ": size " + std::to_string(bytes) +
                      " bytes does not match " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " float32");
  seq.values.resize(rows, cols);
  in.read(reinterpret_cast<char*>(seq.values.data()), bytes);
  if (!in) throw IoError("short read on " + bin_path.string());
  if (!seq.values.allFinite())
    throw FormatError(bin_path.string() + ": non-finite feature value");
  return seq;
}

void save_features(const FeatureSequence& seq, const std::filesystem::path& bin_path) {
  {
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw IoError("cannot write features " + bin_path.string());
    out.write(reinterpret_cast<const char*>(seq.values.data()),
              static_cast<std::streamsize>(seq.values.size() * sizeof(float)));
    if (!out) throw IoError("short write on " + bin_path.string());
  }
  const auto side = feature_sidecar_path(bin_path);
  std::ofstream meta(side);
  if (!meta) throw IoError("cannot write " + side.string());
  meta << nlohmann::json{{"rows", seq.values.rows()},
                         {"cols", seq.values.cols()},
                         {"video_id", seq.video_id},
                         {"dtype", "float32"}}
              .dump(2)
       << '\n';
}

}  // namespace ctxspot
