#include "xymetts/artifacts.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xymetts {

namespace {

constexpr const char* kTrajectoryHeader = "# xymetts trajectory v1";
constexpr const char* kMemberHeader = "# xymetts member v1";
constexpr const char* kCurveHeader = "# xymetts curve v1";

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void expect_header(std::istream& in, const char* header, const std::string& path) {
  std::string line;
  std::getline(in, line);
  if (line != header) {
    throw std::runtime_error(path + ": unsupported format (expected '" +
                             std::string(header) + "')");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string term_reason_token(TermReason r) { return to_string(r); }

TermReason term_reason_from_token(const std::string& s) {
  if (s == "completed") return TermReason::completed;
  if (s == "threshold") return TermReason::threshold;
  if (s == "spike") return TermReason::spike;
  if (s == "step_rejected") return TermReason::step_rejected;
  throw std::runtime_error("unknown term_reason token: " + s);
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
  auto out = open_out(path);
  out << kTrajectoryHeader << "\n";
  out << "tau\tenergy\th2\tgrad_norm\tterminated\n";
  for (const auto& r : traj) {
    out << format_double(r.tau) << '\t' << format_double(r.energy) << '\t'
        << format_double(r.h2) << '\t' << format_double(r.grad_norm) << '\t'
        << (r.terminated ? 1 : 0) << '\n';
  }
}

Trajectory read_trajectory(const std::string& path) {
  auto in = open_in(path);
  expect_header(in, kTrajectoryHeader, path);
  std::string line;
  std::getline(in, line);  // column header
  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    StepRecord r;
    int term = 0;
    if (std::sscanf(line.c_str(), "%lf\t%lf\t%lf\t%lf\t%d", &r.tau, &r.energy, &r.h2,
                    &r.grad_norm, &term) != 5) {
      throw std::runtime_error(path + ": malformed trajectory row: " + line);
    }
    r.terminated = term != 0;
    traj.push_back(r);
  }
  return traj;
}

void write_member(const std::string& path, const MemberArtifact& m) {
  auto out = open_out(path);
  out << kMemberHeader << "\n";
  char hashbuf[32];
  std::snprintf(hashbuf, sizeof(hashbuf), "%016" PRIx64, m.config_hash);
  out << "# id " << m.id << " config_hash " << hashbuf << " term_reason "
      << term_reason_token(m.term_reason) << " usable_len " << m.usable_len << "\n";
  out << "# section derived\n";
  out << "tau\tbeta\tsmoothed_energy\tsmoothed_h2\n";
  for (std::size_t k = 0; k < m.taus.size(); ++k) {
    out << format_double(m.taus[k]) << '\t' << format_double(m.betas[k]) << '\t'
        << format_double(m.smoothed_energy[k]) << '\t'
        << format_double(m.smoothed_h2[k]) << '\n';
  }
  out << "# section grid\n";
  out << "beta\tenergy\tlog_z\tvalid\n";
  for (std::size_t k = 0; k < m.grid.size(); ++k) {
    out << format_double(m.grid[k]) << '\t' << format_double(m.table.energy[k]) << '\t'
        << format_double(m.table.log_z[k]) << '\t' << int(m.table.valid[k]) << '\n';
  }
}

MemberArtifact read_member(const std::string& path) {
  auto in = open_in(path);
  expect_header(in, kMemberHeader, path);
  MemberArtifact m;
  std::string line;
  std::getline(in, line);
  {
    std::istringstream is(line);
    std::string hash_hex, tok, reason;
    // "# id <id> config_hash <hex> term_reason <r> usable_len <n>"
    is >> tok >> tok >> m.id >> tok >> hash_hex >> tok >> reason >> tok >> m.usable_len;
    if (!is) throw std::runtime_error(path + ": malformed member header");
    m.config_hash = std::strtoull(hash_hex.c_str(), nullptr, 16);
    m.term_reason = term_reason_from_token(reason);
  }
  int section = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "# section derived") { section = 1; std::getline(in, line); continue; }
    if (line == "# section grid") { section = 2; std::getline(in, line); continue; }
    if (line[0] == '#') continue;
    if (section == 1) {
      double tau, beta, se, sh2;
      if (std::sscanf(line.c_str(), "%lf\t%lf\t%lf\t%lf", &tau, &beta, &se, &sh2) != 4) {
        throw std::runtime_error(path + ": malformed derived row: " + line);
      }
      m.taus.push_back(tau);
      m.betas.push_back(beta);
      m.smoothed_energy.push_back(se);
      m.smoothed_h2.push_back(sh2);
    } else if (section == 2) {
      double beta, e, lnz;
      int valid;
      if (std::sscanf(line.c_str(), "%lf\t%lf\t%lf\t%d", &beta, &e, &lnz, &valid) != 4) {
        throw std::runtime_error(path + ": malformed grid row: " + line);
      }
      m.grid.push_back(beta);
      m.table.energy.push_back(e);
      m.table.log_z.push_back(lnz);
      m.table.valid.push_back(static_cast<std::uint8_t>(valid));
    }
  }
  return m;
}

void write_curve(const std::string& path, const ThermalCurve& curve, int n_sites,
                 Boundary boundary) {
  auto out = open_out(path);
  out << kCurveHeader << "\n";
  out << "# model n_sites " << n_sites << " boundary "
      << (boundary == Boundary::periodic ? "periodic" : "open") << "\n";
  const bool with_exact = !curve.exact.empty();
  out << "beta\tenergy_estimate\tn_contributing";
  if (with_exact) out << "\tenergy_exact";
  out << "\n";
  for (std::size_t i = 0; i < curve.betas.size(); ++i) {
    if (!curve.defined[i]) {
      out << "# omitted beta " << format_double(curve.betas[i])
          << " (no contributing members)\n";
      continue;
    }
    out << format_double(curve.betas[i]) << '\t' << format_double(curve.energy[i]) << '\t'
        << curve.n_contributing[i];
    if (with_exact) out << '\t' << format_double(curve.exact[i]);
    out << '\n';
  }
}

CurveFile read_curve(const std::string& path) {
  auto in = open_in(path);
  expect_header(in, kCurveHeader, path);
  CurveFile cf;
  std::string line;
  std::getline(in, line);
  {
    std::istringstream is(line);
    std::string tok, bnd;
    is >> tok >> tok >> cf.n_sites >> tok >> bnd;
    if (!is) throw std::runtime_error(path + ": malformed model line");
    cf.boundary = (bnd == "periodic") ? Boundary::periodic : Boundary::open;
  }
  std::getline(in, line);  // column header
  const bool with_exact = line.find("energy_exact") != std::string::npos;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    double beta, e, ex = 0.0;
    int nc;
    const int want = with_exact ? 4 : 3;
    const int got = with_exact
                        ? std::sscanf(line.c_str(), "%lf\t%lf\t%d\t%lf", &beta, &e, &nc, &ex)
                        : std::sscanf(line.c_str(), "%lf\t%lf\t%d", &beta, &e, &nc);
    if (got != want) throw std::runtime_error(path + ": malformed curve row: " + line);
    cf.curve.betas.push_back(beta);
    cf.curve.energy.push_back(e);
    cf.curve.n_contributing.push_back(nc);
    cf.curve.defined.push_back(1);
    if (with_exact) cf.curve.exact.push_back(ex);
  }
  return cf;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void put_array(std::ostream& out, const char* name, const Eigen::MatrixXcd& m) {
  const std::uint32_t len = static_cast<std::uint32_t>(std::strlen(name));
  put_u32(out, len);
  out.write(name, len);
  put_u32(out, 2);
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Complex) * m.size()));
}

Eigen::MatrixXcd get_array(std::istream& in, std::string& name) {
  const std::uint32_t len = get_u32(in);
  name.resize(len);
  in.read(name.data(), len);
  const std::uint32_t ndim = get_u32(in);
  if (ndim != 2) throw std::runtime_error("wavefunction snapshot: bad array rank");
  const auto rows = static_cast<Eigen::Index>(get_u64(in));
  const auto cols = static_cast<Eigen::Index>(get_u64(in));
  Eigen::MatrixXcd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(Complex) * m.size()));
  if (!in) throw std::runtime_error("wavefunction snapshot: truncated array");
  return m;
}

}  // namespace

void write_wavefunction(const std::string& path, const LstmWavefunction& w) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("XYWF", 4);
  put_u32(out, 1);  // format version; doubles are little-endian
  put_u32(out, 8);  // array count
  put_array(out, "l1.w_x", w.layer1.w_x);
  put_array(out, "l1.w_h", w.layer1.w_h);
  put_array(out, "l1.b", w.layer1.b);
  put_array(out, "l2.w_x", w.layer2.w_x);
  put_array(out, "l2.w_h", w.layer2.w_h);
  put_array(out, "l2.b", w.layer2.b);
  put_array(out, "w_out", w.w_out);
  put_array(out, "site_bias", w.site_bias);
}

LstmWavefunction read_wavefunction(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "XYWF", 4) != 0) {
    throw std::runtime_error(path + ": not a wavefunction snapshot");
  }
  const std::uint32_t version = get_u32(in);
  if (version != 1) throw std::runtime_error(path + ": unsupported snapshot version");
  const std::uint32_t count = get_u32(in);
  LstmWavefunction w;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    Eigen::MatrixXcd m = get_array(in, name);
    if (name == "l1.w_x") w.layer1.w_x = m;
    else if (name == "l1.w_h") w.layer1.w_h = m;
    else if (name == "l1.b") w.layer1.b = m;
    else if (name == "l2.w_x") w.layer2.w_x = m;
    else if (name == "l2.w_h") w.layer2.w_h = m;
    else if (name == "l2.b") w.layer2.b = m;
    else if (name == "w_out") w.w_out = m;
    else if (name == "site_bias") w.site_bias = m;
    else throw std::runtime_error(path + ": unknown array '" + name + "'");
  }
  w.n_sites = static_cast<int>(w.site_bias.cols());
  return w;
}

}  // namespace xymetts
