#pragma once

#include <pfpt/acceptance.hpp>
#include <pfpt/bessel_fptd.hpp>
#include <pfpt/coeff_engine.hpp>
#include <pfpt/density_curve.hpp>
#include <pfpt/errors.hpp>
#include <pfpt/laplace_inversion.hpp>
#include <pfpt/mc_validation.hpp>
#include <pfpt/ou_fptd.hpp>
#include <pfpt/process.hpp>
#include <pfpt/special_functions.hpp>
