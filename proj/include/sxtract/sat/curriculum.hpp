#pragma once

#include <sxtract/sat/config.hpp>

#include <cstdint>

namespace sxtract::sat {

/// linear:      p_start - (p_start - p_end) * min(1, step / decay_steps)
/// exponential: p_end + (p_start - p_end) * exp(-3 step / decay_steps), and
///              p_end from decay_steps on.
/// decay_steps == 0 means the schedule is already finished: p_end for step > 0.
double curriculum_p(std::int64_t step, const CurriculumSchedule& schedule);

}  // namespace sxtract::sat
