/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "forasec/checker.hpp"
#include "forasec/cli.hpp"
#include "forasec/coverage.hpp"
#include "forasec/intrusion.hpp"
#include "forasec/netlist.hpp"
#include "forasec/paths.hpp"
#include "forasec/report.hpp"
#include "forasec/sidechannel.hpp"
#include "forasec/smv.hpp"
#include "forasec/statespace.hpp"
#include "forasec/techmodel.hpp"
