#pragma once

#include <string>

// Small hand-written cases shared across the test files. Column layout follows
// the standard case format: bus = [id type Pd Qd Gs Bs area Vm Va baseKV zone
// Vmax Vmin], gen = [bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin],
// branch = [from to r x b rateA rateB rateC ratio angle status ...].

// One slack generator feeding one PQ load bus over a single line.
inline const std::string kTwoBusCase = R"(function mpc = case2
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0  0 0 0 1 1.0 0 230 1 1.06 0.94;
  2 1 10 5 0 0 1 1.0 0 230 1 1.06 0.94;
];
mpc.gen = [
  1 0 0 50 -50 1.0 100 1 60 0;
];
mpc.branch = [
  1 2 0.01 0.1 0.02 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [
  2 0 0 3 0.01 40 0;
];
)";

// No load, no charging: the flat start is already the solution.
inline const std::string kFlatCase = R"(function mpc = flat
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0 0 0 0 1 1.0 0 230 1 1.06 0.94;
  2 1 0 0 0 0 1 1.0 0 230 1 1.06 0.94;
];
mpc.gen = [
  1 0 0 50 -50 1.0 100 1 60 0;
];
mpc.branch = [
  1 2 0.01 0.1 0 0 0 0 0 0 1;
];
mpc.gencost = [
  2 0 0 3 0.01 40 0;
];
)";

// Three buses: slack, PV generator, PQ load; a triangle of lines. Rich enough
// to exercise every dispatch segment (p_g, v_g, loads) without a case file.
inline const std::string kThreeBusCase = R"(function mpc = case3
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0  0  0 0 1 1.0 0 230 1 1.06 0.94;
  2 2 0  0  0 0 1 1.0 0 230 1 1.06 0.94;
  3 1 90 30 0 0 1 1.0 0 230 1 1.06 0.94;
];
mpc.gen = [
  1 0  0 80 -80 1.02 100 1 150 5;
  2 60 0 60 -60 1.01 100 1 120 5;
];
mpc.branch = [
  1 2 0.02 0.2  0.04 0 0 0 0 0 1;
  1 3 0.04 0.25 0.02 0 0 0 0 0 1;
  2 3 0.03 0.15 0.03 0 0 0 0 0 1;
];
mpc.gencost = [
  2 0 0 3 0.02  30 0;
  2 0 0 3 0.015 25 0;
];
)";
