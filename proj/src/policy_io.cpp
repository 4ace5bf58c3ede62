// Policy file: text header terminated by "end\n", then H (row-major) and V as
// little-endian float64. Layout is documented in docs/file_formats.md.

#include <cmath>
#include <fstream>
#include <sstream>

#include "znav/binary_io.hpp"
#include "znav/errors.hpp"
#include "znav/rl.hpp"

namespace znav::rl {

namespace {
constexpr const char* kMagic = "ZNAV-POLICY";
constexpr int kVersion = 1;
}  // namespace

void save_policy(const PolicyParams& params, const TileCoder& coder, const ActionSet& actions,
                 const std::filesystem::path& path) {
  if (params.n_states != coder.n_states() || params.n_actions != actions.size())
    throw ParameterError("save_policy: policy shape does not match coder/action set");
  using io::fmt_double;
  std::ostringstream head;
  head << kMagic << '\n' << "version " << kVersion << '\n';
  head << "states " << params.n_states << '\n';
  head << "actions " << params.n_actions << '\n';
  head << "coder " << fmt_double(coder.origin.x()) << ' ' << fmt_double(coder.origin.y()) << ' '
       << fmt_double(coder.tile_size) << ' ' << coder.nx << ' ' << coder.ny << '\n';
  head << "angles";
  for (double a : actions.angles) head << ' ' << fmt_double(a);
  head << '\n';
  head << "include_off " << (actions.include_off ? 1 : 0) << '\n';

  std::string payload;
  for (double h : params.preferences) io::put_f64(payload, h);
  for (double v : params.values) io::put_f64(payload, v);
  head << "checksum " << io::fnv1a(payload) << '\n';
  head << "end\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const std::string h = head.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

PolicyFile load_policy(const std::filesystem::path& path) {
  const std::string data = io::read_file(path);
  io::HeaderReader reader(data);
  if (reader.line() != kMagic) throw FormatError("not a ZNAV-POLICY file", 0);
  if (auto f = reader.fields("version", 1); f[0] != std::to_string(kVersion))
    throw VersionError(f[0]);

  const int n_states = reader.number<int>(reader.fields("states", 1), 0);
  const int n_actions = reader.number<int>(reader.fields("actions", 1), 0);
  PolicyFile file;
  {
    auto f = reader.fields("coder", 5);
    file.coder.origin = Vec2(reader.number<double>(f, 0), reader.number<double>(f, 1));
    file.coder.tile_size = reader.number<double>(f, 2);
    file.coder.nx = reader.number<int>(f, 3);
    file.coder.ny = reader.number<int>(f, 4);
  }
  {
    auto f = reader.fields("angles", 0);
    for (std::size_t i = 0; i < f.size(); ++i) file.actions.angles.push_back(reader.number<double>(f, i));
  }
  file.actions.include_off = reader.number<int>(reader.fields("include_off", 1), 0) != 0;
  const auto checksum = reader.number<std::uint64_t>(reader.fields("checksum", 1), 0);
  reader.expect_end();

  if (n_states < 1 || n_actions < 1 || n_states != file.coder.n_states() ||
      n_actions != file.actions.size()) {
    throw FormatError("policy header shape is inconsistent", 0);
  }

  const auto n_h = static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions);
  io::PayloadReader payload(data, reader.offset());
  payload.require(n_h + static_cast<std::size_t>(n_states), 8, "policy value");
  file.params = PolicyParams(n_states, n_actions);
  for (auto& h : file.params.preferences) h = payload.f64();
  for (auto& v : file.params.values) v = payload.f64();
  payload.expect_exhausted();
  if (io::fnv1a(std::string_view(data).substr(reader.offset())) != checksum)
    throw FormatError("policy payload checksum mismatch", reader.offset());

  for (std::size_t i = 0; i < file.params.preferences.size(); ++i)
    if (!std::isfinite(file.params.preferences[i]))
      throw FormatError("non-finite preference", reader.offset() + 8 * i);
  for (std::size_t i = 0; i < file.params.values.size(); ++i)
    if (!std::isfinite(file.params.values[i]))
      throw FormatError("non-finite value", reader.offset() + 8 * (n_h + i));
  return file;
}

PolicyFile load_policy(const std::filesystem::path& path, const TileCoder& coder,
                       const ActionSet& actions) {
  PolicyFile file = load_policy(path);
  if (file.params.n_states != coder.n_states() || file.params.n_actions != actions.size()) {
    throw FormatError("policy shape " + std::to_string(file.params.n_states) + "x" +
                          std::to_string(file.params.n_actions) + " does not match declared " +
                          std::to_string(coder.n_states()) + "x" +
                          std::to_string(actions.size()),
                      0);
  }
  return file;
}

}  // namespace znav::rl
