// (a, b, t, two-tailed p) frozen from scipy.stats.ttest_rel
const CASES: &[(&[f64], &[f64], f64, f64)] = &[
    (&[0.625, 0.897, 0.776], &[0.518, 0.842, 0.657], -4.768880738947473, 0.041268274668511705),
    (&[0.005, 0.821, 0.797], &[0.000, 0.930, 0.890], 1.842812333870406, 0.2066828221621832),
    (&[0.255, 0.445, 0.505], &[0.488, 0.434, 0.600], 1.4958822373246332, 0.27333513392173076),
    (&[0.622, 0.989, 0.215], &[0.894, 1.000, 0.548], 2.0793374811174012, 0.17312233104053584),
    (&[0.036, 0.515, 0.466], &[0.000, 0.409, 0.380], -3.650921906755986, 0.0675139094266306),
    (&[0.497, 0.248, 0.012, 0.192, 0.692, 0.201], &[0.400, 0.244, 0.118, 0.122, 0.679, 0.214], -0.37382383516275686, 0.7238627001054996),
    (&[0.510, 0.847, 0.640, 0.742, 0.091, 0.541], &[0.574, 0.820, 0.930, 0.883, 0.000, 0.600], 1.3349986100560378, 0.2394319438277417),
    (&[0.323, 0.150, 0.816, 0.379, 0.979, 0.590], &[0.392, 0.324, 0.910, 0.544, 0.987, 0.670], 3.85247516655587, 0.011971017847963403),
    (&[0.402, 0.097, 0.968, 0.215, 0.672, 0.300], &[0.463, 0.341, 1.000, 0.666, 1.000, 0.561], 3.5222275914141288, 0.016878977881967867),
    (&[0.570, 0.145, 0.192, 0.928, 0.552, 0.181], &[0.456, 0.021, 0.000, 0.827, 0.399, 0.221], -3.3217065148022846, 0.020968933279070602),
    (&[0.038, 0.876, 0.468, 0.548, 0.322, 0.751, 0.025, 0.372, 0.030, 0.123, 0.967], &[0.001, 0.768, 0.488, 0.817, 0.222, 0.676, 0.050, 0.431, 0.009, 0.098, 1.000], 0.11630265977338534, 0.9097151749612254),
    (&[0.151, 0.933, 0.005, 0.753, 0.811, 0.137, 0.419, 0.815, 0.014, 0.628, 0.793], &[0.187, 0.743, 0.000, 0.847, 0.606, 0.289, 0.259, 0.956, 0.000, 0.771, 0.859], 0.12978334235201516, 0.8993112936075245),
    (&[0.952, 0.444, 0.980, 0.516, 0.521, 0.897, 0.743, 0.581, 0.427, 0.878, 0.412], &[1.000, 0.441, 1.000, 0.648, 0.787, 1.000, 0.810, 0.692, 0.510, 1.000, 0.517], 4.488993514398731, 0.0011627241189456792),
    (&[0.398, 0.203, 0.051, 0.213, 0.915, 0.840, 0.112, 0.604, 0.479, 0.595, 0.659], &[0.622, 0.292, 0.439, 0.510, 1.000, 1.000, 0.467, 0.839, 0.762, 0.762, 0.813], 7.250151072609226, 2.758041207871657e-05),
    (&[0.113, 0.913, 0.802, 0.878, 0.523, 0.916, 0.047, 0.030, 0.020, 0.253, 0.249], &[0.095, 0.859, 0.634, 0.612, 0.537, 0.932, 0.000, 0.000, 0.014, 0.253, 0.260], -1.8632408203270423, 0.09202407724732546),
    (&[0.658, 0.611, 0.191, 0.574, 0.040, 0.802, 0.960, 0.854, 0.051, 0.339, 0.318, 0.113, 0.627, 0.797, 0.314, 0.863, 0.797, 0.129, 0.767, 0.883, 0.197, 0.574, 0.639, 0.609, 0.096, 0.661, 0.632, 0.824, 0.804, 0.327, 0.722], &[0.552, 0.634, 0.097, 0.617, 0.081, 1.000, 0.793, 0.961, 0.040, 0.337, 0.144, 0.058, 0.716, 0.787, 0.324, 0.828, 0.936, 0.126, 0.503, 0.800, 0.000, 0.184, 0.575, 0.769, 0.102, 0.520, 0.519, 0.960, 0.823, 0.333, 0.716], -1.3247171130553894, 0.19526795715818956),
    (&[0.131, 0.081, 0.906, 0.269, 0.306, 0.833, 0.620, 0.187, 0.435, 0.884, 0.375, 0.711, 0.097, 0.727, 0.776, 0.826, 0.674, 0.371, 0.064, 0.519, 0.757, 0.191, 0.266, 0.536, 0.748, 0.897, 0.126, 0.184, 0.800, 0.645, 0.721], &[0.369, 0.247, 1.000, 0.399, 0.369, 0.909, 0.640, 0.213, 0.492, 1.000, 0.492, 0.754, 0.077, 0.701, 1.000, 0.937, 0.732, 0.379, 0.000, 0.561, 0.912, 0.194, 0.289, 0.559, 0.811, 0.756, 0.148, 0.131, 0.956, 0.603, 0.840], 3.851423110649292, 0.0005734481828559777),
    (&[0.988, 0.117, 0.177, 0.575, 0.446, 0.750, 0.191, 0.914, 0.217, 0.769, 0.068, 0.473, 0.033, 0.314, 0.312, 0.720, 0.455, 0.057, 0.995, 0.889, 0.916, 0.247, 0.394, 0.227, 0.125, 0.033, 0.503, 0.123, 0.176, 0.860, 0.484], &[1.000, 0.302, 0.302, 0.751, 0.632, 0.864, 0.336, 1.000, 0.357, 0.979, 0.443, 0.694, 0.190, 0.262, 0.509, 0.636, 0.436, 0.310, 1.000, 1.000, 0.861, 0.352, 0.463, 0.453, 0.546, 0.209, 0.559, 0.133, 0.319, 0.989, 0.496], 5.9337694731693436, 1.6780705851275644e-06),
    (&[0.761, 0.708, 0.850, 0.681, 0.736, 0.302, 0.168, 0.757, 0.166, 0.919, 0.597, 0.329, 0.937, 0.155, 0.514, 0.092, 0.965, 0.575, 0.804, 0.282, 0.802, 0.703, 0.644, 0.951, 0.433, 0.415, 0.692, 0.835, 0.335, 0.670, 0.209], &[1.000, 0.973, 1.000, 1.000, 1.000, 0.793, 0.390, 1.000, 0.265, 1.000, 1.000, 0.479, 1.000, 0.495, 0.689, 0.332, 1.000, 0.869, 1.000, 0.483, 1.000, 0.880, 0.789, 1.000, 0.839, 0.531, 0.992, 1.000, 0.518, 1.000, 0.447], 11.217313871585578, 2.9521911299713886e-12),
    (&[0.620, 0.819, 0.678, 0.642, 0.406, 0.558, 0.396, 0.744, 0.380, 0.467, 0.755, 0.504, 0.338, 0.827, 0.381, 0.845, 0.785, 0.447, 0.713, 0.034, 0.390, 0.860, 0.580, 0.558, 0.665, 0.678, 0.584, 0.421, 0.183, 0.293, 0.293], &[0.572, 0.602, 0.433, 0.322, 0.529, 0.420, 0.325, 0.640, 0.299, 0.373, 0.884, 0.279, 0.051, 0.606, 0.121, 0.835, 0.783, 0.232, 0.446, 0.000, 0.457, 0.422, 0.543, 0.329, 0.690, 0.449, 0.450, 0.140, 0.000, 0.359, 0.291], -5.058367988596254, 1.9756606048555587e-05),
];
