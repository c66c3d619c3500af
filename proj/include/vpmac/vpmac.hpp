#pragma once

#include "vpmac/numeric.hpp"
#include "vpmac/profile.hpp"
#include "vpmac/channel.hpp"
#include "vpmac/design_types.hpp"
#include "vpmac/contention.hpp"
#include "vpmac/design.hpp"
#include "vpmac/mac.hpp"
#include "vpmac/sim.hpp"
#include "vpmac/config.hpp"
#include "vpmac/serialize.hpp"
#include "vpmac/verify.hpp"
#include "vpmac/presets.hpp"
