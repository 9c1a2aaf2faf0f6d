#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "logeuler/error.hpp"

namespace logeuler::experiments {

enum class RateModel {
  kPower,   // e = C nu^beta
  kLogLog,  // e = C |log nu|^-gamma
};

inline std::string to_string(RateModel m) { return m == RateModel::kPower ? "power" : "loglog"; }

struct RateFit {
  RateModel model = RateModel::kPower;
  double C = 0.0;
  double exponent = 0.0;  // beta for power, gamma for loglog
  double residual = 0.0;  // max_i |e_i - fit_i| / fit_i
  std::vector<std::pair<double, double>> table;  // (nu, error)

  double predict(double nu) const {
    return model == RateModel::kPower ? C * std::pow(nu, exponent)
                                      : C * std::pow(std::abs(std::log(nu)), -exponent);
  }
};

/// Least squares on log-transformed coordinates.
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& table, RateModel model) {
  if (table.size() < 3) throw DomainError("rate fit needs at least 3 points");
  std::vector<double> xs, ys;
  for (const auto& [nu, e] : table) {
    if (!(e > 0.0)) throw DomainError("rate fit needs strictly positive errors");
    if (!(nu > 0.0)) throw DomainError("rate fit needs positive viscosities");
    if (model == RateModel::kLogLog && !(nu < 1.0)) {
      throw DomainError("loglog model needs nu < 1");
    }
    xs.push_back(model == RateModel::kPower ? std::log(nu) : std::log(std::abs(std::log(nu))));
    ys.push_back(std::log(e));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw DomainError("rate fit needs distinct viscosities");
  const double slope = sxy / sxx;

  RateFit fit;
  fit.model = model;
  fit.exponent = model == RateModel::kPower ? slope : -slope;
  fit.C = std::exp(my - slope * mx);
  fit.table = table;
  for (const auto& [nu, e] : table) {
    const double p = fit.predict(nu);
    fit.residual = std::max(fit.residual, std::abs(e - p) / p);
  }
  return fit;
}

}  // namespace logeuler::experiments
