#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "logeuler/snapshot_io.hpp"

namespace logeuler::logspaces {

enum class SeminormKind { kHlogFourier, kHlogPhysical, kWlog, kXgp, kCommutator };

inline std::string to_string(SeminormKind k) {
  switch (k) {
    case SeminormKind::kHlogFourier: return "hlog-fourier";
    case SeminormKind::kHlogPhysical: return "hlog-physical";
    case SeminormKind::kWlog: return "wlog";
    case SeminormKind::kXgp: return "xgp";
    case SeminormKind::kCommutator: return "commutator";
  }
  return "unknown";
}

struct SeminormReport {
  SeminormKind kind = SeminormKind::kHlogFourier;
  // alpha for hlog, theta for wlog, gamma for xgp.
  double order = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  // Commutator: the kernel width. Wlog: the h attaining the maximum.
  double h = std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  int n = 0;
  std::string quadrature;
  // Wlog only: (h, |log h|^-theta * kernel integral) for every h evaluated.
  std::vector<std::pair<double, double>> h_profile;
};

inline void write_report_csv_header(std::ostream& out) {
  out << "kind,order,p,h,value,N,quadrature\n";
}

inline void write_report_csv_row(std::ostream& out, const SeminormReport& r) {
  auto num = [](double v) { return std::isnan(v) ? std::string() : io::format_double(v); };
  out << to_string(r.kind) << ',' << num(r.order) << ',' << num(r.p) << ',' << num(r.h) << ','
      << io::format_double(r.value) << ',' << r.n << ',' << r.quadrature << '\n';
}

}  // namespace logeuler::logspaces
