#include "ifbound/numeric.hpp"

#include <boost/math/distributions/normal.hpp>

#include "ifbound/errors.hpp"

namespace ifbound {

double normal_critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(boost::math::complement(standard, alpha / 2.0));
}

}  // namespace ifbound
