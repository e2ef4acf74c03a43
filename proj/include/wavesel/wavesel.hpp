#pragma once

// Convenience umbrella: pulls in the full simulator and learner stack.

#include "wavesel/common.hpp"
#include "wavesel/config.hpp"
#include "wavesel/fft.hpp"
#include "wavesel/waveform.hpp"
#include "wavesel/scene.hpp"
#include "wavesel/rd_pipeline.hpp"
#include "wavesel/cfar.hpp"
#include "wavesel/dbscan.hpp"
#include "wavesel/perception.hpp"
#include "wavesel/bandit.hpp"
#include "wavesel/harness.hpp"
