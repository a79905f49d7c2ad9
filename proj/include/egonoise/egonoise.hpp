#pragma once

#include "egonoise/audio.hpp"
#include "egonoise/config.hpp"
#include "egonoise/dictionary.hpp"
#include "egonoise/enhancer.hpp"
#include "egonoise/error.hpp"
#include "egonoise/pca.hpp"
#include "egonoise/scm.hpp"
#include "egonoise/stft.hpp"
