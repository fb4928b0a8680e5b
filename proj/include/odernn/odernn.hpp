#pragma once

// Batch-efficient ODE-RNN training for irregular time series: umbrella header.

#include "odernn/data.hpp"
#include "odernn/dynamics.hpp"
#include "odernn/errors.hpp"
#include "odernn/evolver.hpp"
#include "odernn/gru.hpp"
#include "odernn/matrix.hpp"
#include "odernn/models.hpp"
#include "odernn/random.hpp"
#include "odernn/report.hpp"
#include "odernn/tape.hpp"
#include "odernn/training.hpp"
