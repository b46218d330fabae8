#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xymetts/lstm.hpp"
#include "xymetts/thermal.hpp"

namespace xymetts {

// All tables are tab-separated text with a versioned '#' header and
// full-precision (17 significant digit) doubles, so values round-trip
// exactly through write/read.

// Trajectory stream: columns tau, energy, h2, grad_norm, terminated.
void write_trajectory(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory(const std::string& path);

// Per-member artifact: header (id, term_reason, usable_len, config hash),
// the derived (tau, beta, smoothed E, smoothed H^2) table and the
// (beta, energy, ln Z, valid) grid table.
struct MemberArtifact {
  int id = 0;
  std::uint64_t config_hash = 0;
  TermReason term_reason = TermReason::completed;
  std::size_t usable_len = 0;
  std::vector<double> taus, betas, smoothed_energy, smoothed_h2;
  std::vector<double> grid;
  WeightTable table;
};

void write_member(const std::string& path, const MemberArtifact& m);
MemberArtifact read_member(const std::string& path);

// Thermal curve export: header row 'beta energy_estimate n_contributing
// [energy_exact]'; grid points without contributing members are omitted and
// flagged in a comment. A comment line records the model so `compare` can
// default its oracle arguments.
void write_curve(const std::string& path, const ThermalCurve& curve, int n_sites,
                 Boundary boundary);

struct CurveFile {
  ThermalCurve curve;
  int n_sites = 0;
  Boundary boundary = Boundary::periodic;
};
CurveFile read_curve(const std::string& path);

// Binary parameter snapshot: named complex arrays with shape metadata,
// little-endian doubles, versioned ("XYWF" 1).
void write_wavefunction(const std::string& path, const LstmWavefunction& w);
LstmWavefunction read_wavefunction(const std::string& path);

std::string term_reason_token(TermReason r);
TermReason term_reason_from_token(const std::string& s);

// Full-precision decimal formatting used by every table writer.
std::string format_double(double v);

}  // namespace xymetts
