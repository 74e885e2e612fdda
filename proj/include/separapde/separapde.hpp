#pragma once

// Everything except the command-line front end.

#include "separapde/adam.hpp"
#include "separapde/adaptive.hpp"
#include "separapde/analysis.hpp"
#include "separapde/assembly.hpp"
#include "separapde/config.hpp"
#include "separapde/error.hpp"
#include "separapde/fem.hpp"
#include "separapde/grid.hpp"
#include "separapde/mapping.hpp"
#include "separapde/pgd.hpp"
#include "separapde/quadrature.hpp"
#include "separapde/separated.hpp"
#include "separapde/serialize.hpp"
#include "separapde/source.hpp"
#include "separapde/tensor.hpp"
#include "separapde/tridiag.hpp"
