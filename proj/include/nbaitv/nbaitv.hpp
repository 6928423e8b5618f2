#pragma once

#include "nbaitv/version.hpp"
#include "nbaitv/image.hpp"
#include "nbaitv/image_io.hpp"
#include "nbaitv/fft.hpp"
#include "nbaitv/operators.hpp"
#include "nbaitv/noise_model.hpp"
#include "nbaitv/prox.hpp"
#include "nbaitv/admm.hpp"
#include "nbaitv/metrics.hpp"
#include "nbaitv/phantom.hpp"
#include "nbaitv/experiment.hpp"
