// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <ostream>

#include "stackdelay/config.hpp"

namespace stackdelay {

// exit codes: 0 ok, 1 numerical or verification failure, 2 usage or config error
int cmd_validate(const RunConfig& rc, std::ostream& out);
int cmd_solve(const RunConfig& rc, std::ostream& out);
int cmd_simulate(const RunConfig& rc, std::ostream& out);
int cmd_perturb(const RunConfig& rc, std::ostream& out);

int run_cli(int argc, char** argv);

}  // namespace stackdelay
