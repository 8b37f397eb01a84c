//! Reference optima of the tabulated spatial and bulk-time configurations,
//! as `(m_opt, lambda_opt, P1_max, P0)` at the stated rounding.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptimum {
    pub stages: u32,
    pub lambda: f64,
    pub p1: f64,
    /// Not every reference point quotes `P_0`.
    pub p0: Option<f64>,
}

const fn r(stages: u32, lambda: f64, p1: f64, p0: f64) -> ReferenceOptimum {
    ReferenceOptimum {
        stages,
        lambda,
        p1,
        p0: Some(p0),
    }
}

/// Detector efficiencies of the spatial table blocks.
pub const SPATIAL_DETECTORS: [f64; 3] = [1.0, 0.9, 0.2];

/// `(V_R, [optimum at each of SPATIAL_DETECTORS])`, `V_b = 1`.
pub const SPATIAL_TABLE: [(f64, [ReferenceOptimum; 3]); 7] = [
    (
        0.3,
        [
            r(1, 5.60, 0.385, 0.397),
            r(1, 5.63, 0.385, 0.392),
            r(2, 43.00, 0.369, 0.369),
        ],
    ),
    (
        0.5,
        [
            r(1, 2.90, 0.434, 0.364),
            r(1, 3.03, 0.423, 0.356),
            r(3, 59.38, 0.371, 0.372),
        ],
    ),
    (
        0.6,
        [
            r(1, 2.41, 0.456, 0.331),
            r(1, 2.52, 0.439, 0.330),
            r(3, 30.18, 0.379, 0.375),
        ],
    ),
    (
        0.8,
        [
            r(2, 3.03, 0.535, 0.312),
            r(2, 3.19, 0.521, 0.308),
            r(4, 20.50, 0.422, 0.378),
        ],
    ),
    (
        0.85,
        [
            r(2, 2.73, 0.569, 0.264),
            r(3, 4.20, 0.556, 0.336),
            r(5, 25.25, 0.449, 0.409),
        ],
    ),
    (
        0.9,
        [
            r(3, 3.44, 0.635, 0.255),
            r(3, 3.63, 0.621, 0.254),
            r(5, 16.93, 0.515, 0.332),
        ],
    ),
    (
        0.95,
        [
            r(4, 3.89, 0.737, 0.185),
            r(5, 5.04, 0.729, 0.220),
            r(7, 21.27, 0.648, 0.282),
        ],
    ),
];

/// Detector efficiencies of the bulk-time table blocks.
pub const BULK_DETECTORS: [f64; 2] = [1.0, 0.2];

/// `((V_r, V_r0, V_t), [optimum at each of BULK_DETECTORS])`, `V_b = 1`.
pub const BULK_TABLE: [((f64, f64, f64), [ReferenceOptimum; 2]); 8] = [
    (
        (1.0, 1.0, 1.0),
        [r(15, 11.09, 0.999, 1.5e-5), r(15, 44.45, 0.999, 1.4e-4)],
    ),
    (
        (1.0, 1.0, 0.95),
        [r(15, 6.85, 0.956, 0.0439), r(15, 33.62, 0.955, 0.0439)],
    ),
    (
        (0.996, 0.97, 0.99),
        [r(7, 7.00, 0.887, 0.0903), r(10, 35.24, 0.843, 0.1341)],
    ),
    (
        (0.996, 0.97, 0.95),
        [r(7, 6.60, 0.858, 0.1222), r(10, 33.27, 0.815, 0.1646)],
    ),
    (
        (0.996, 0.97, 0.9),
        [r(6, 5.21, 0.822, 0.1484), r(9, 26.26, 0.781, 0.1890)],
    ),
    (
        (0.98, 0.97, 0.95),
        [r(6, 5.19, 0.806, 0.1662), r(9, 26.50, 0.749, 0.2240)],
    ),
    (
        (0.97, 0.97, 0.95),
        [r(5, 4.41, 0.779, 0.1748), r(8, 22.75, 0.715, 0.2410)],
    ),
    (
        (0.96, 0.97, 0.95),
        [r(5, 4.37, 0.755, 0.2021), r(8, 22.71, 0.684, 0.2767)],
    ),
];

/// Row 4 of the bulk-time table with a `V_D = 0.9` detector.
pub const BULK_ROW4_DETECTOR: f64 = 0.9;
pub const BULK_ROW4_AT_DETECTOR: ReferenceOptimum = ReferenceOptimum {
    stages: 7,
    lambda: 6.92,
    p1: 0.854,
    p0: None,
};
