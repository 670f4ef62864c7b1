#pragma once

#include "whdet/corpus.hpp"
#include "whdet/determinants.hpp"
#include "whdet/errors.hpp"
#include "whdet/fft.hpp"
#include "whdet/identities.hpp"
#include "whdet/operators.hpp"
#include "whdet/rng.hpp"
#include "whdet/symbol.hpp"
#include "whdet/wiener_hopf.hpp"
