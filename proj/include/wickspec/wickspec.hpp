#pragma once

// Umbrella header. The FFT demo pulls in FFTW; link wickspec_fft when using it.
#include "wickspec/cone.hpp"
#include "wickspec/function_space.hpp"
#include "wickspec/laplace.hpp"
#include "wickspec/profile.hpp"
#include "wickspec/scenario.hpp"
#include "wickspec/sequence.hpp"
#include "wickspec/spectral_demo.hpp"
#include "wickspec/test_function.hpp"
#include "wickspec/wick.hpp"
