"""Monomial coefficient table for real orthonormal spherical harmonics
l <= 5, as homogeneous harmonic polynomials in (x, y, z).

Generated by tools/gen_sh_table.py (sympy); do not edit by hand.
Entry format: COEFFS[(l, m)] = ((ix, iy, iz, coefficient), ...)."""

COEFFS = {
    (0, 0): ((0, 0, 0, 0.2820947917738781435),),
    (1, -1): ((0, 1, 0, 0.4886025119029199216),),
    (1, 0): ((0, 0, 1, 0.4886025119029199216),),
    (1, 1): ((1, 0, 0, 0.4886025119029199216),),
    (2, -2): ((1, 1, 0, 1.092548430592079071),),
    (2, -1): ((0, 1, 1, 1.092548430592079071),),
    (2, 0): ((2, 0, 0, -0.3153915652525200060), (0, 2, 0, -0.3153915652525200060), (0, 0, 2, 0.6307831305050400121)),
    (2, 1): ((1, 0, 1, 1.092548430592079071),),
    (2, 2): ((2, 0, 0, 0.5462742152960395353), (0, 2, 0, -0.5462742152960395353)),
    (3, -3): ((2, 1, 0, 1.770130769779930531), (0, 3, 0, -0.5900435899266435103)),
    (3, -2): ((1, 1, 1, 2.890611442640554055),),
    (3, -1): ((2, 1, 0, -0.4570457994644657362), (0, 3, 0, -0.4570457994644657362), (0, 1, 2, 1.828183197857862945)),
    (3, 0): ((2, 0, 1, -1.119528997770346174), (0, 2, 1, -1.119528997770346174), (0, 0, 3, 0.7463526651802307828)),
    (3, 1): ((3, 0, 0, -0.4570457994644657362), (1, 2, 0, -0.4570457994644657362), (1, 0, 2, 1.828183197857862945)),
    (3, 2): ((2, 0, 1, 1.445305721320277028), (0, 2, 1, -1.445305721320277028)),
    (3, 3): ((3, 0, 0, 0.5900435899266435103), (1, 2, 0, -1.770130769779930531)),
    (4, -4): ((3, 1, 0, 2.503342941796704538), (1, 3, 0, -2.503342941796704538)),
    (4, -3): ((2, 1, 1, 5.310392309339791593), (0, 3, 1, -1.770130769779930531)),
    (4, -2): ((3, 1, 0, -0.9461746957575600181), (1, 3, 0, -0.9461746957575600181), (1, 1, 2, 5.677048174545360109)),
    (4, -1): ((2, 1, 1, -2.007139630671867504), (0, 3, 1, -2.007139630671867504), (0, 1, 3, 2.676186174229156672)),
    (4, 0): ((4, 0, 0, 0.3173566407456129114), (2, 2, 0, 0.6347132814912258228), (2, 0, 2, -2.538853125964903291), (0, 4, 0, 0.3173566407456129114), (0, 2, 2, -2.538853125964903291), (0, 0, 4, 0.8462843753216344304)),
    (4, 1): ((3, 0, 1, -2.007139630671867504), (1, 2, 1, -2.007139630671867504), (1, 0, 3, 2.676186174229156672)),
    (4, 2): ((4, 0, 0, -0.4730873478787800090), (2, 0, 2, 2.838524087272680054), (0, 4, 0, 0.4730873478787800090), (0, 2, 2, -2.838524087272680054)),
    (4, 3): ((3, 0, 1, 1.770130769779930531), (1, 2, 1, -5.310392309339791593)),
    (4, 4): ((4, 0, 0, 0.6258357354491761346), (2, 2, 0, -3.755014412695056808), (0, 4, 0, 0.6258357354491761346)),
    (5, -5): ((4, 1, 0, 3.281910284200850514), (2, 3, 0, -6.563820568401701028), (0, 5, 0, 0.6563820568401701028)),
    (5, -4): ((3, 1, 1, 8.302649259524165116), (1, 3, 1, -8.302649259524165116)),
    (5, -3): ((4, 1, 0, -1.467714898305751163), (2, 3, 0, -0.9784765988705007754), (2, 1, 2, 11.74171918644600930), (0, 5, 0, 0.4892382994352503877), (0, 3, 2, -3.913906395482003101)),
    (5, -2): ((3, 1, 1, -4.793536784973323755), (1, 3, 1, -4.793536784973323755), (1, 1, 3, 9.587073569946647510)),
    (5, -1): ((4, 1, 0, 0.4529466511956969213), (2, 3, 0, 0.9058933023913938426), (2, 1, 2, -5.435359814348363056), (0, 5, 0, 0.4529466511956969213), (0, 3, 2, -5.435359814348363056), (0, 1, 4, 3.623573209565575370)),
    (5, 0): ((4, 0, 1, 1.754254836801353947), (2, 2, 1, 3.508509673602707893), (2, 0, 3, -4.678012898136943858), (0, 4, 1, 1.754254836801353947), (0, 2, 3, -4.678012898136943858), (0, 0, 5, 0.9356025796273887715)),
    (5, 1): ((5, 0, 0, 0.4529466511956969213), (3, 2, 0, 0.9058933023913938426), (3, 0, 2, -5.435359814348363056), (1, 4, 0, 0.4529466511956969213), (1, 2, 2, -5.435359814348363056), (1, 0, 4, 3.623573209565575370)),
    (5, 2): ((4, 0, 1, -2.396768392486661877), (2, 0, 3, 4.793536784973323755), (0, 4, 1, 2.396768392486661877), (0, 2, 3, -4.793536784973323755)),
    (5, 3): ((5, 0, 0, -0.4892382994352503877), (3, 2, 0, 0.9784765988705007754), (3, 0, 2, 3.913906395482003101), (1, 4, 0, 1.467714898305751163), (1, 2, 2, -11.74171918644600930)),
    (5, 4): ((4, 0, 1, 2.075662314881041279), (2, 2, 1, -12.45397388928624767), (0, 4, 1, 2.075662314881041279)),
    (5, 5): ((5, 0, 0, 0.6563820568401701028), (3, 2, 0, -6.563820568401701028), (1, 4, 0, 3.281910284200850514)),
}
