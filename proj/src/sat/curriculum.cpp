#include <sxtract/sat/curriculum.hpp>

#include <sxtract/error.hpp>

#include <algorithm>
#include <cmath>

namespace sxtract::sat {

double curriculum_p(std::int64_t step, const CurriculumSchedule& s) {
  if (step < 0) throw Error("curriculum_p: negative step");
  if (step == 0) return s.p_start;
  if (s.decay_steps == 0 || step >= s.decay_steps) return s.p_end;
  const double frac = static_cast<double>(step) / static_cast<double>(s.decay_steps);
  if (s.shape == CurriculumShape::kLinear) return s.p_start - (s.p_start - s.p_end) * std::min(1.0, frac);
  return std::max(s.p_end, s.p_end + (s.p_start - s.p_end) * std::exp(-3.0 * frac));
}

}  // namespace sxtract::sat
