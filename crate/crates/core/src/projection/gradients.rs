//! Per-pair terms of the layout objective and their gradients with respect
//! to the first point. The gradient with respect to the second point is the
//! negation.
//!
//! attraction: `w · ln(1 + d²)` (= `-w · ln q`)
//! repulsion:  `γ · ln((1 + d²) / d²)` (= `-γ · ln(1 - q)`)

pub type Point = [f64; 2];

#[inline]
pub fn sq_dist(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

#[inline]
pub fn attraction_loss(yi: Point, yj: Point, w: f64) -> f64 {
    w * sq_dist(yi, yj).ln_1p()
}

#[inline]
pub fn attraction_grad(yi: Point, yj: Point, w: f64) -> Point {
    let c = 2.0 * w / (1.0 + sq_dist(yi, yj));
    [c * (yi[0] - yj[0]), c * (yi[1] - yj[1])]
}

#[inline]
pub fn repulsion_loss(yi: Point, yn: Point, gamma: f64) -> f64 {
    let d2 = sq_dist(yi, yn);
    gamma * (d2.ln_1p() - d2.ln())
}

#[inline]
pub fn repulsion_grad(yi: Point, yn: Point, gamma: f64) -> Point {
    let d2 = sq_dist(yi, yn);
    let c = -2.0 * gamma / (d2 * (1.0 + d2));
    [c * (yi[0] - yn[0]), c * (yi[1] - yn[1])]
}
