// Frozen reference values for data/case14.m, generated by
// tests/oracle/reference_pf.py (independent numpy Newton power flow
// with element-wise textbook Jacobian). Do not edit by hand.
#pragma once

namespace refcase14 {

inline constexpr int n_bus = 14;
inline constexpr int n_branch = 20;
inline constexpr int n_gen = 5;
inline constexpr int box_dim = 9;
inline constexpr int newton_iterations = 4;

inline constexpr double vm[14] = {
    1.0600000000000001e+00,
    1.0449999999999999e+00,
    1.0100000000000000e+00,
    1.0294892711599921e+00,
    1.0348827075352409e+00,
    1.0700000000000001e+00,
    1.0558758052903015e+00,
    1.0900000000000001e+00,
    1.0496724015809100e+00,
    1.0458220270822900e+00,
    1.0542951640670035e+00,
    1.0546925776268181e+00,
    1.0494853564995736e+00,
    1.0315436287748876e+00,
};

inline constexpr double va[14] = {
    0.0000000000000000e+00,
    -8.6424951590243881e-02,
    -2.2018638011991326e-01,
    -1.8186606194653515e-01,
    -1.5630828255356632e-01,
    -2.5607269420306200e-01,
    -2.3655127882937974e-01,
    -2.3655127882937974e-01,
    -2.6475560191291209e-01,
    -2.6818318723465107e-01,
    -2.6433977322827462e-01,
    -2.7080617484855718e-01,
    -2.7184240995447712e-01,
    -2.8541527253986826e-01,
};

inline constexpr double qg[5] = {
    -2.3530567284739767e-01,
    2.7413301905337684e-01,
    1.8014420984319340e-01,
    4.0364046171981088e-01,
    2.1115737856129080e-01,
};

inline constexpr double slack_p = 2.3237532410695603e+00;
inline constexpr double slack_q = -2.3530567284739767e-01;
inline constexpr double cost = 8.1710129906553302e+03;

}  // namespace refcase14
