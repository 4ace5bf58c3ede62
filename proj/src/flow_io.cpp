// Flow file: text header terminated by "end\n", then a little-endian binary payload.
// Layout is documented in docs/file_formats.md.

#include <fstream>
#include <sstream>

#include "znav/binary_io.hpp"
#include "znav/errors.hpp"
#include "znav/flowfield.hpp"

namespace znav::flow {

namespace {

constexpr const char* kMagic = "ZNAV-FLOW";
constexpr int kVersion = 1;
constexpr std::size_t kModeRecordBytes = 4 + 4 + 8 + 8 + 8;

const char* analytic_name(AnalyticKind k) {
  switch (k) {
    case AnalyticKind::Quiescent: return "quiescent";
    case AnalyticKind::Uniform: return "uniform";
    case AnalyticKind::TaylorGreen: return "taylor_green";
  }
  return "quiescent";
}

}  // namespace

void export_flow(const FlowField& flow, const std::filesystem::path& path) {
  using io::fmt_double;
  std::ostringstream head;
  head << kMagic << '\n' << "version " << kVersion << '\n';

  std::string payload;
  const auto& rep = flow.representation();
  if (const auto* a = std::get_if<AnalyticFlow>(&rep)) {
    head << "kind analytic\n";
    head << "period " << fmt_double(flow.period()) << '\n';
    head << "spec none\n";
    head << "analytic " << analytic_name(a->kind) << ' ' << fmt_double(a->amplitude) << ' '
         << fmt_double(a->drift.x()) << ' ' << fmt_double(a->drift.y()) << '\n';
  } else if (const auto* ms = std::get_if<ModeSum>(&rep)) {
    head << "kind modesum\n";
    head << "period " << fmt_double(flow.period()) << '\n';
    if (const auto& s = flow.spectrum()) {
      head << "spec " << s->k_min << ' ' << s->k_max << ' ' << fmt_double(s->slope) << ' '
           << fmt_double(s->energy_scale) << ' ' << s->seed << '\n';
    } else {
      head << "spec none\n";
    }
    const auto& tmp = ms->temporal();
    head << "temporal " << tmp.seed << ' ' << fmt_double(tmp.horizon) << ' '
         << tmp.points_per_decorrelation << '\n';
    head << "modes " << ms->modes().size() << '\n';
    for (const auto& m : ms->modes()) {
      io::put_i32(payload, m.kx);
      io::put_i32(payload, m.ky);
      io::put_f64(payload, m.amplitude);
      io::put_f64(payload, m.phase);
      io::put_f64(payload, m.decorrelation_rate);
    }
  } else {
    const auto& g = std::get<GriddedFlow>(rep);
    head << "kind gridded\n";
    head << "period " << fmt_double(flow.period()) << '\n';
    head << "spec none\n";
    head << "dims " << g.nx() << ' ' << g.ny() << '\n';
    for (double x : g.u()) io::put_f64(payload, x);
    for (double x : g.v()) io::put_f64(payload, x);
  }
  head << "end\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const std::string h = head.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

FlowField import_flow(const std::filesystem::path& path) {
  const std::string data = io::read_file(path);
  io::HeaderReader reader(data);

  if (reader.line() != kMagic) throw FormatError("not a ZNAV-FLOW file", 0);
  if (auto f = reader.fields("version", 1); f[0] != std::to_string(kVersion)) {
    throw VersionError(f[0]);
  }
  const std::string kind = reader.fields("kind", 1)[0];
  const double period = reader.number<double>(reader.fields("period", 1), 0);

  std::optional<SpectrumSpec> spec;
  {
    auto f = reader.fields("spec", 0);
    if (f.size() == 1 && f[0] == "none") {
    } else if (f.size() == 5) {
      SpectrumSpec s;
      s.k_min = reader.number<int>(f, 0);
      s.k_max = reader.number<int>(f, 1);
      s.slope = reader.number<double>(f, 2);
      s.energy_scale = reader.number<double>(f, 3);
      s.seed = reader.number<std::uint64_t>(f, 4);
      spec = s;
    } else {
      reader.fail("malformed spec line");
    }
  }

  if (kind == "analytic") {
    auto f = reader.fields("analytic", 4);
    reader.expect_end();
    reader.expect_no_payload();
    const double amp = reader.number<double>(f, 1);
    const Vec2 drift(reader.number<double>(f, 2), reader.number<double>(f, 3));
    if (f[0] == "quiescent") return FlowField::quiescent(period);
    if (f[0] == "uniform") return FlowField::uniform(drift, period);
    if (f[0] == "taylor_green") return FlowField::taylor_green(amp, period);
    reader.fail("unknown analytic flow '" + f[0] + "'");
  }

  if (kind == "modesum") {
    auto tf = reader.fields("temporal", 3);
    TemporalSettings temporal;
    temporal.seed = reader.number<std::uint64_t>(tf, 0);
    temporal.horizon = reader.number<double>(tf, 1);
    temporal.points_per_decorrelation = reader.number<int>(tf, 2);
    const auto count = reader.number<std::size_t>(reader.fields("modes", 1), 0);
    reader.expect_end();

    io::PayloadReader payload(data, reader.offset());
    payload.require(count, kModeRecordBytes, "mode record");
    std::vector<FourierMode> modes(count);
    for (auto& m : modes) {
      m.kx = payload.i32();
      m.ky = payload.i32();
      m.amplitude = payload.f64();
      m.phase = payload.f64();
      m.decorrelation_rate = payload.f64();
    }
    payload.expect_exhausted();
    try {
      return FlowField::from_modes(std::move(modes), period, temporal, spec);
    } catch (const ParameterError& e) {
      throw FormatError(std::string("invalid mode data: ") + e.what(), reader.offset());
    }
  }

  if (kind == "gridded") {
    auto f = reader.fields("dims", 2);
    const int nx = reader.number<int>(f, 0);
    const int ny = reader.number<int>(f, 1);
    reader.expect_end();
    if (nx < 2 || ny < 2) throw FormatError("gridded dims must be >= 2", reader.offset());
    const auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    io::PayloadReader payload(data, reader.offset());
    payload.require(2 * n, 8, "velocity value");
    std::vector<double> u(n), v(n);
    for (auto& x : u) x = payload.f64();
    for (auto& x : v) x = payload.f64();
    payload.expect_exhausted();
    return FlowField::gridded(nx, ny, std::move(u), std::move(v), period);
  }

  throw FormatError("unknown flow kind '" + kind + "'", 0);
}

}  // namespace znav::flow
