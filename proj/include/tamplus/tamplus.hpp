// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tamplus/calibration.hpp"
#include "tamplus/error.hpp"
#include "tamplus/estimator.hpp"
#include "tamplus/graph.hpp"
#include "tamplus/harness.hpp"
#include "tamplus/online.hpp"
#include "tamplus/predictions.hpp"
#include "tamplus/rng.hpp"
#include "tamplus/selftest.hpp"
