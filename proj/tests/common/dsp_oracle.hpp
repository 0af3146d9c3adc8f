// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors
//
// Brute-force MFCC reference: direct DFT per frame, triangular HTK filters,
// explicit DCT-II sums. Slow and written without any library FFT.

#pragma once

#include <cmath>
#include <vector>

namespace respira::testing {

struct OracleConfig {
  int sample_rate = 16000;
  int window = 400;
  int hop = 160;
  int n_fft = 512;
  int n_mels = 64;
  int n_mfcc = 40;
  double log_floor = 1e-10;
};

inline std::vector<std::vector<double>> OraclePower(const std::vector<double>& x, const OracleConfig& c) {
  std::vector<std::vector<double>> out;
  if (static_cast<int>(x.size()) < c.window) return out;
  const int frames = 1 + (static_cast<int>(x.size()) - c.window) / c.hop;
  const int bins = c.n_fft / 2 + 1;
  for (int t = 0; t < frames; ++t) {
    std::vector<double> row(static_cast<std::size_t>(bins));
    for (int k = 0; k < bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < c.window; ++i) {
        const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (c.window - 1)));
        const double v = x[static_cast<std::size_t>(t * c.hop + i)] * w;
        const double ang = 2.0 * M_PI * static_cast<double>(k) * i / c.n_fft;
        re += v * std::cos(ang);
        im -= v * std::sin(ang);
      }
      row[static_cast<std::size_t>(k)] = re * re + im * im;
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<std::vector<double>> OracleFilters(const OracleConfig& c) {
  auto mel = [](double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::exp(m / 1127.0) - 1.0); };
  const double top = mel(c.sample_rate / 2.0);
  std::vector<std::vector<double>> fb(static_cast<std::size_t>(c.n_mels),
                                      std::vector<double>(static_cast<std::size_t>(c.n_fft / 2 + 1), 0.0));
  for (int m = 0; m < c.n_mels; ++m) {
    const double l = hz(top * m / (c.n_mels + 1));
    const double ctr = hz(top * (m + 1) / (c.n_mels + 1));
    const double r = hz(top * (m + 2) / (c.n_mels + 1));
    for (int k = 0; k <= c.n_fft / 2; ++k) {
      const double f = static_cast<double>(k) * c.sample_rate / c.n_fft;
      double w = 0.0;
      if (f > l && f < r) w = f <= ctr ? (f - l) / (ctr - l) : (r - f) / (r - ctr);
      fb[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = w;
    }
  }
  return fb;
}

inline std::vector<std::vector<double>> OracleLogMel(const std::vector<double>& x, const OracleConfig& c) {
  const auto power = OraclePower(x, c);
  const auto fb = OracleFilters(c);
  std::vector<std::vector<double>> out;
  for (const auto& row : power) {
    std::vector<double> e(static_cast<std::size_t>(c.n_mels));
    for (int m = 0; m < c.n_mels; ++m) {
      double s = 0.0;
      for (std::size_t k = 0; k < row.size(); ++k) s += row[k] * fb[static_cast<std::size_t>(m)][k];
      e[static_cast<std::size_t>(m)] = std::log(s + c.log_floor);
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<std::vector<double>> OracleMfcc(const std::vector<double>& x, const OracleConfig& c) {
  std::vector<std::vector<double>> out;
  for (const auto& e : OracleLogMel(x, c)) {
    std::vector<double> cep(static_cast<std::size_t>(c.n_mfcc));
    for (int q = 0; q < c.n_mfcc; ++q) {
      double s = 0.0;
      for (int m = 0; m < c.n_mels; ++m) s += e[static_cast<std::size_t>(m)] * std::cos(M_PI * q * (2 * m + 1) / (2.0 * c.n_mels));
      cep[static_cast<std::size_t>(q)] = s * std::sqrt((q == 0 ? 1.0 : 2.0) / c.n_mels);
    }
    out.push_back(std::move(cep));
  }
  return out;
}

}  // namespace respira::testing
