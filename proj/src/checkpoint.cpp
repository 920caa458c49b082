#include <fstream>

#include "binary_io.hpp"
#include "qin/model.hpp"

namespace qin {

namespace {

constexpr const char* kMagic = "QINCKPT1";

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace

void save_checkpoint(const ModelParams& p, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  const auto views = param_views(p);
  os.write(kMagic, 8);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(views.size()));
  for (const auto& v : views) {
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(v.name.size()));
    os.write(v.name.data(), static_cast<std::streamsize>(v.name.size()));
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(v.shape.size()));
    for (auto d : v.shape) detail::write_le<std::uint64_t>(os, d);
  }
  for (const auto& v : views) {
    for (double x : v.data) detail::write_f64(os, x);
  }
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path, const HyperParams& hp) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  detail::expect_magic(is, kMagic, path.string());

  // Shapes only matter here; the values are overwritten below.
  Rng scratch(0);
  ModelParams p = init_params(hp, scratch);
  auto views = param_views(p);

  const auto count = detail::read_le<std::uint32_t>(is, "tensor count");
  if (count != views.size()) {
    throw ShapeMismatchError("checkpoint holds " + std::to_string(count) +
                             " tensors, configuration expects " + std::to_string(views.size()));
  }
  for (const auto& v : views) {
    const auto name_len = detail::read_le<std::uint32_t>(is, "name length");
    if (name_len > 4096) throw ShapeMismatchError("implausible tensor name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw TruncatedFileError("truncated tensor name");
    const auto rank = detail::read_le<std::uint32_t>(is, "rank");
    if (rank > 8) throw ShapeMismatchError("implausible tensor rank for " + name);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = detail::read_le<std::uint64_t>(is, "dims");
    if (name != v.name || shape != v.shape) {
      throw ShapeMismatchError("checkpoint tensor " + name + shape_str(shape) +
                               " does not match expected " + v.name + shape_str(v.shape));
    }
  }
  for (auto& v : views) {
    for (auto& x : v.data) x = detail::read_f64(is, v.name);
  }
  return p;
}

}  // namespace qin
