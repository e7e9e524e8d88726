#pragma once

#include "wgqed/analysis.hpp"
#include "wgqed/core.hpp"
#include "wgqed/ddi.hpp"
#include "wgqed/scattering.hpp"
