// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "perspex/errors.hpp"
#include "perspex/mc_oracle.hpp"
#include "perspex/pl_core.hpp"
#include "perspex/placement_optimizer.hpp"
#include "perspex/power_analytics.hpp"
#include "perspex/tridiagonal.hpp"
