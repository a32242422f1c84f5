#include "ctxspot/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "ctxspot/errors.hpp"
#include "ctxspot/hashing.hpp"

namespace ctxspot {
namespace {

constexpr char kMagic[8] = {'C', 'T', 'X', 'S', 'P', 'O', 'T', '\0'};

template <typename U>
void put(std::ostream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U get(std::istream& in, const std::filesystem::path& path) {
  U v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (!in) throw FormatError(path.string() + ": truncated checkpoint");
  return v;
}

}  // namespace

std::uint64_t shape_hash(const NetworkShape& s) {
  std::ostringstream os;
  os << s.chunk_frames << ' ' << s.feature_dim << ' ' << s.mlp_hidden << ' ' << s.mlp_out;
  for (int k : s.kernels) os << ' ' << k;
  for (int c : s.channels) os << ' ' << c;
  os << ' ' << s.num_classes << ' ' << s.class_features << ' ' << s.spot_channels1 << ' '
     << s.spot_channels2 << ' ' << s.num_predictions;
  return fnv1a64(os.str());
}

void save_checkpoint(const ModelParams<float>& params, const SpottingConfig& cfg,
                     const std::filesystem::path& path) {
  const NetworkShape shape = NetworkShape::from_config(cfg);
  if (!(shape == params.shape()))
    throw PreconditionError("parameters do not match the network built from the config");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, shape_hash(shape));
  put<std::uint32_t>(out, kNumBlocks);
  for (int i = 0; i < kNumBlocks; ++i) {
    const auto b = static_cast<Block>(i);
    const auto [rows, cols] = shape.block_dims(b);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rows));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(params.values().data() + params.offset(b)),
              static_cast<std::streamsize>(params.block_size(b) * sizeof(float)));
  }
  if (!out) throw IoError("short write on " + path.string());
}

ModelParams<float> load_checkpoint(const std::filesystem::path& path,
                                   const SpottingConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + ": not a checkpoint (bad magic)");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  const NetworkShape shape = NetworkShape::from_config(cfg);
  if (get<std::uint64_t>(in, path) != shape_hash(shape))
    throw FormatError(path.string() + ": checkpoint was trained for a different network shape");
  if (get<std::uint32_t>(in, path) != static_cast<std::uint32_t>(kNumBlocks))
    throw FormatError(path.string() + ": unexpected block count");
  ModelParams<float> params(shape);
  auto values = params.mutable_values();
  for (int i = 0; i < kNumBlocks; ++i) {
    const auto b = static_cast<Block>(i);
    const auto [rows, cols] = shape.block_dims(b);
    const auto r = get<std::uint32_t>(in, path);
    const auto c = get<std::uint32_t>(in, path);
    if (r != static_cast<std::uint32_t>(rows) || c != static_cast<std::uint32_t>(cols))
      throw FormatError(path.string() + ": block " + std::string(block_name(b)) +
                        " has shape " + std::to_string(r) + "x" + std::to_string(c));
    in.read(reinterpret_cast<char*>(values.data() + params.offset(b)),
            static_cast<std::streamsize>(params.block_size(b) * sizeof(float)));
    if (!in) throw FormatError(path.string() + ": truncated checkpoint");
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError(path.string() + ": trailing bytes after the last block");
  if (!params.all_finite()) throw FormatError(path.string() + ": non-finite parameter");
  return params;
}

}  // namespace ctxspot
