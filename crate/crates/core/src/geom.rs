//! Grid geometry primitives: integer positions, axis directions, turns.
//!
//! Everything in the simulator is exact integer arithmetic; there is no
//! rounding anywhere in the system.

use serde::{Deserialize, Serialize};

/// A point on the integer grid. East is `+x`, north is `+y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: i64,
    pub y: i64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0, y: 0 };

    pub fn new(x: i64, y: i64) -> Self {
        Position { x, y }
    }

    pub fn l1_distance(self, other: Position) -> i64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn offset(self, v: Vector) -> Position {
        Position::new(self.x + v.dx, self.y + v.dy)
    }

    pub fn vector_to(self, other: Position) -> Vector {
        Vector::new(other.x - self.x, other.y - self.y)
    }

    pub fn translate(self, dx: i64, dy: i64) -> Position {
        Position::new(self.x + dx, self.y + dy)
    }

    /// Rotate 90° counter-clockwise about the origin.
    pub fn rotate_ccw(self) -> Position {
        Position::new(-self.y, self.x)
    }
}

/// An integer displacement between grid positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vector {
    pub dx: i64,
    pub dy: i64,
}

impl Vector {
    pub const ZERO: Vector = Vector { dx: 0, dy: 0 };

    pub fn new(dx: i64, dy: i64) -> Self {
        Vector { dx, dy }
    }

    pub fn l1_norm(self) -> i64 {
        self.dx.abs() + self.dy.abs()
    }

    pub fn is_unit(self) -> bool {
        self.l1_norm() == 1
    }

    pub fn add(self, other: Vector) -> Vector {
        Vector::new(self.dx + other.dx, self.dy + other.dy)
    }

    pub fn neg(self) -> Vector {
        Vector::new(-self.dx, -self.dy)
    }

    pub fn scale(self, k: i64) -> Vector {
        Vector::new(self.dx * k, self.dy * k)
    }

    /// z-component of the cross product; positive means `other` is left of `self`.
    pub fn cross(self, other: Vector) -> i64 {
        self.dx * other.dy - self.dy * other.dx
    }

    pub fn dot(self, other: Vector) -> i64 {
        self.dx * other.dx + self.dy * other.dy
    }

    pub fn perpendicular_to(self, other: Vector) -> bool {
        self.dot(other) == 0
    }

    pub fn rotate_ccw(self) -> Vector {
        Vector::new(-self.dy, self.dx)
    }
}

/// One of the four axis step directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Step {
    North,
    East,
    South,
    West,
    /// Zero-length step; legal in hand-built chains, never produced by generators.
    Stay,
}

impl Step {
    pub fn vector(self) -> Vector {
        match self {
            Step::North => Vector::new(0, 1),
            Step::East => Vector::new(1, 0),
            Step::South => Vector::new(0, -1),
            Step::West => Vector::new(-1, 0),
            Step::Stay => Vector::ZERO,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Step::North => 'N',
            Step::East => 'E',
            Step::South => 'S',
            Step::West => 'W',
            Step::Stay => '0',
        }
    }

    /// 90° counter-clockwise.
    pub fn rotate_ccw(self) -> Step {
        match self {
            Step::North => Step::West,
            Step::West => Step::South,
            Step::South => Step::East,
            Step::East => Step::North,
            Step::Stay => Step::Stay,
        }
    }

    /// Mirror east/west (reflection across the vertical axis).
    pub fn reflect_x(self) -> Step {
        match self {
            Step::East => Step::West,
            Step::West => Step::East,
            other => other,
        }
    }
}

/// The turn a robot makes between its incoming and outgoing chain step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Turn {
    Left,
    Right,
    Straight,
    /// 180° reversal; implies a merge pattern of type 1.
    UTurn,
}

impl Turn {
    pub fn between(incoming: Vector, outgoing: Vector) -> Turn {
        debug_assert!(incoming.is_unit() && outgoing.is_unit());
        match incoming.cross(outgoing) {
            1 => Turn::Left,
            -1 => Turn::Right,
            _ => {
                if incoming.dot(outgoing) > 0 {
                    Turn::Straight
                } else {
                    Turn::UTurn
                }
            }
        }
    }

    pub fn opposite(self) -> Turn {
        match self {
            Turn::Left => Turn::Right,
            Turn::Right => Turn::Left,
            other => other,
        }
    }

    pub fn is_corner(self) -> bool {
        matches!(self, Turn::Left | Turn::Right)
    }

    /// Signed quarter turns: left +1, right −1.
    pub fn quarter_turns(self) -> i64 {
        match self {
            Turn::Left => 1,
            Turn::Right => -1,
            Turn::Straight => 0,
            Turn::UTurn => 2,
        }
    }
}
