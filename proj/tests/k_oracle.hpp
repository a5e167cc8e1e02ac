#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cstdint>
#include <string>

// Inflation factor evaluated term by term in 50-digit arithmetic, using
// plain powers instead of expm1/log1p.
namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;

inline Big inflation(const std::string& lambda_text, std::int64_t i, const std::string& n_text) {
  const Big lambda(lambda_text);
  const Big n(n_text);
  const Big q = Big(1) - lambda;
  const Big qi = boost::multiprecision::pow(q, static_cast<int>(i));
  const Big a = lambda / (Big(2) - lambda) * (Big(1) - qi * qi);
  const Big c = (Big(1) - qi) * (Big(1) - qi);
  return (a + Big("3.72") / n * c) / (a + c / n);
}

inline Big inflation_limit(const std::string& lambda_text, const std::string& n_text) {
  const Big lambda(lambda_text);
  const Big n(n_text);
  const Big a = lambda / (Big(2) - lambda);
  return (a + Big("3.72") / n) / (a + Big(1) / n);
}

}  // namespace oracle
