#include "scar/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "scar/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace scar {

namespace {

constexpr const char* kMagic = "SCARCKPT1";

}  // namespace

void save_checkpoint(const Classifier& model, const std::string& path, int epoch,
                     const std::string& method) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  out << kMagic << "\n";
  out << "layers=";
  for (size_t i = 0; i < model.spec.layer_sizes.size(); ++i) {
    if (i) out << ",";
    out << model.spec.layer_sizes[i];
  }
  out << "\n";
  out << "seed=" << model.rng_seed << "\n";
  out << "epoch=" << epoch << "\n";
  out << "method=" << method << "\n";
  out << "end\n";
  for (size_t l = 0; l < model.weights.size(); ++l) {
    out.write(reinterpret_cast<const char*>(model.weights[l].data.data()),
              static_cast<std::streamsize>(model.weights[l].numel() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(model.biases[l].data.data()),
              static_cast<std::streamsize>(model.biases[l].numel() * sizeof(float)));
  }
  if (!out) throw CheckpointError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);

  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw CheckpointError(path + " is not a SCAR checkpoint (bad magic)");

  MlpSpec spec;
  uint64_t seed = 0;
  Checkpoint ckpt;
  bool saw_end = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      saw_end = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CheckpointError(path + ": malformed header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "layers") {
      std::stringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ',')) spec.layer_sizes.push_back(std::stoll(tok));
    } else if (key == "seed") {
      seed = std::stoull(val);
    } else if (key == "epoch") {
      ckpt.epoch = std::stoi(val);
    } else if (key == "method") {
      ckpt.method = val;
    } else {
      throw CheckpointError(path + ": unknown header key '" + key + "'");
    }
  }
  if (!saw_end) throw CheckpointError(path + ": truncated header (missing 'end')");
  spec.validate();

  ckpt.model.spec = spec;
  ckpt.model.rng_seed = seed;
  for (size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    Array w({spec.layer_sizes[l], spec.layer_sizes[l + 1]});
    Array b({spec.layer_sizes[l + 1]});
    in.read(reinterpret_cast<char*>(w.data.data()),
            static_cast<std::streamsize>(w.numel() * sizeof(float)));
    in.read(reinterpret_cast<char*>(b.data.data()),
            static_cast<std::streamsize>(b.numel() * sizeof(float)));
    if (!in)
      throw CheckpointError(path + ": truncated parameter buffer at layer " + std::to_string(l));
    ckpt.model.weights.push_back(std::move(w));
    ckpt.model.biases.push_back(std::move(b));
  }
  char extra;
  if (in.read(&extra, 1))
    throw CheckpointError(path + ": trailing bytes after parameter buffers");
  return ckpt;
}

void require_spec(const Checkpoint& ckpt, const MlpSpec& expected) {
  const auto& got = ckpt.model.spec.layer_sizes;
  const auto& want = expected.layer_sizes;
  const size_t layers = std::max(got.size(), want.size());
  for (size_t l = 0; l < layers; ++l) {
    const int64_t g = l < got.size() ? got[l] : -1;
    const int64_t w = l < want.size() ? want[l] : -1;
    if (g != w)
      throw CheckpointError("checkpoint spec " + ckpt.model.spec.str() +
                            " does not match configured spec " + expected.str() +
                            " (first mismatch at layer " + std::to_string(l) + ")");
  }
}

}  // namespace scar
